import { describe, expect, it } from "vitest";
import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { chunkCount } from "../src/chunking.js";
import { readContainer } from "../src/container.js";
import { StubEncoder } from "../src/encoder.js";
import { embedDocument, embedDocuments } from "../src/embed.js";
import { main } from "../src/cli.js";
import {
  CLS_TOKEN,
  SEP_TOKEN,
  tokenizeToIds,
  vocabularyFromTokens,
} from "../src/wordpiece.js";

const VOCAB = vocabularyFromTokens([
  "[PAD]", "[UNK]", "[CLS]", "[SEP]",
  "a", "b", "c", "the", "quick", "fox", "jumps", "over", "lazy", "dog", ".",
]);
const CLS = VOCAB.ids.get(CLS_TOKEN)!;
const SEP = VOCAB.ids.get(SEP_TOKEN)!;

function stubJob(encoder: StubEncoder, chunkSize = 512, overlap = 50) {
  return {
    encoder,
    tokenize: (text: string) => tokenizeToIds(text, VOCAB),
    clsId: CLS,
    sepId: SEP,
    chunkSize,
    overlap,
    layer: 12,
    batchSize: 8,
  };
}

function tmpFile(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "embed-")), name);
}

describe("embedDocument", () => {
  it("pools a two-token chunk of fixed vectors to their exact mean", () => {
    // Content positions get all-1 and all-3 vectors; the special positions
    // get a poisoned value that must be excluded from pooling.
    const dim = 4;
    const encoder = new StubEncoder(dim, (_id, position) => {
      if (position === 0 || position === 3) return new Array(dim).fill(99);
      return new Array(dim).fill(position === 1 ? 1 : 3);
    });
    return embedDocument("a b", stubJob(encoder)).then((vectors) => {
      expect(vectors).toEqual([[2, 2, 2, 2]]);
    });
  });

  it("gives one 768-dim vector for a short real document", async () => {
    const encoder = new StubEncoder(768);
    const text = "The quick fox jumps over the lazy dog.";
    const vectors = await embedDocument(text, stubJob(encoder));
    expect(vectors.length).toBe(1);
    expect(vectors[0].length).toBe(768);
  });

  it("is deterministic", async () => {
    const encoder = new StubEncoder(16);
    const first = await embedDocument("the quick fox . a b c", stubJob(encoder));
    const second = await embedDocument("the quick fox . a b c", stubJob(encoder));
    expect(first).toEqual(second);
  });

  it("respects the chunking rule for long inputs", async () => {
    const encoder = new StubEncoder(8);
    const words = Array.from({ length: 513 }, (_, i) => "abc"[i % 3]).join(" ");
    const vectors = await embedDocument(words, stubJob(encoder));
    expect(vectors.length).toBe(chunkCount(513, 512, 50));
    expect(vectors.length).toBe(2);
  });
});

describe("embedDocuments", () => {
  it("writes an empty container for an empty document list", async () => {
    const path = tmpFile("empty.schb");
    const result = await embedDocuments({
      documents: [],
      outputPath: path,
      ...stubJob(new StubEncoder(8)),
    });
    expect(result).toEqual({ written: 0, skipped: 0 });
    expect(readContainer(path)).toEqual([]);
  });

  it("skips untokenizable documents with a tally", async () => {
    const path = tmpFile("skipped.schb");
    const result = await embedDocuments({
      documents: [
        { docId: "good", text: "a b c" },
        { docId: "blank", text: "   " },
      ],
      outputPath: path,
      ...stubJob(new StubEncoder(8)),
    });
    expect(result).toEqual({ written: 1, skipped: 1 });
    expect(readContainer(path).map((item) => item.docId)).toEqual(["good"]);
  });

  it("attaches labels by doc id", async () => {
    const path = tmpFile("labeled.schb");
    await embedDocuments({
      documents: [
        { docId: "x", text: "a b" },
        { docId: "y", text: "b c" },
      ],
      outputPath: path,
      labels: new Map([["y", 1.5]]),
      ...stubJob(new StubEncoder(4)),
    });
    const items = readContainer(path);
    expect(items[0].label).toBeNull();
    expect(items[1].label).toBe(1.5);
  });
});

describe("conformance with the trainer-side reader", () => {
  it("containers pass the python reader and match its chunk-count formula", async () => {
    const path = tmpFile("conform.schb");
    const texts = new Map<string, string>([
      ["short", "a b c ."],
      ["exact", Array.from({ length: 16 }, (_, i) => "abc"[i % 3]).join(" ")],
      ["long", Array.from({ length: 100 }, (_, i) => "abc"[i % 3]).join(" ")],
    ]);
    const chunkSize = 16;
    const overlap = 4;
    const subwordLengths = new Map(
      [...texts].map(([docId, text]) => [docId, tokenizeToIds(text, VOCAB).length]),
    );
    await embedDocuments({
      documents: [...texts].map(([docId, text]) => ({ docId, text })),
      outputPath: path,
      labels: new Map([["long", 2.25]]),
      ...stubJob(new StubEncoder(12), chunkSize, overlap),
    });

    const script = [
      "import json, sys",
      "from schubert.chunks import read_embeddings",
      "items = read_embeddings(sys.argv[1])",
      "print(json.dumps([",
      "  {'doc_id': i.doc_id, 'n_chunks': i.n_chunks, 'dim': i.dim, 'label': i.label}",
      "  for i in items]))",
    ].join("\n");
    const output = execFileSync("python3", ["-c", script, path], { encoding: "utf-8" });
    const rows = JSON.parse(output) as {
      doc_id: string; n_chunks: number; dim: number; label: number | null;
    }[];

    expect(rows.map((r) => r.doc_id)).toEqual(["short", "exact", "long"]);
    for (const row of rows) {
      expect(row.dim).toBe(12);
      const n = subwordLengths.get(row.doc_id)!;
      expect(row.n_chunks).toBe(chunkCount(n, chunkSize, overlap));
    }
    expect(rows[2].label).toBe(2.25);
  });
});

describe("cli", () => {
  function writeDocs(path: string, rows: { doc_id: string; text: string }[]) {
    writeFileSync(path, rows.map((row) => JSON.stringify(row)).join("\n") + "\n");
  }

  it("embeds a docs file with the stub encoder", async () => {
    const dir = mkdtempSync(join(tmpdir(), "cli-"));
    const docs = join(dir, "docs.jsonl");
    const out = join(dir, "out.schb");
    writeDocs(docs, [
      { doc_id: "d1", text: "The quick fox." },
      { doc_id: "d2", text: "A lazy dog jumps." },
    ]);
    const code = await main([
      "embed", "--model", "stub:32", "--input", docs, "--output", out,
      "--chunk-size", "16", "--overlap", "4",
    ]);
    expect(code).toBe(0);
    const items = readContainer(out);
    expect(items.length).toBe(2);
    expect(items[0].vectors[0].length).toBe(32);
  });

  it("produces byte-identical output across runs", async () => {
    const dir = mkdtempSync(join(tmpdir(), "cli-"));
    const docs = join(dir, "docs.jsonl");
    writeDocs(docs, [{ doc_id: "d", text: "the quick fox jumps over the lazy dog" }]);
    const first = join(dir, "one.schb");
    const second = join(dir, "two.schb");
    await main(["embed", "--model", "stub:16", "--input", docs, "--output", first]);
    await main(["embed", "--model", "stub:16", "--input", docs, "--output", second]);
    expect(readFileSync(first).equals(readFileSync(second))).toBe(true);
  });

  it("reports usage errors with exit code 1", async () => {
    expect(await main(["embed", "--model", "stub"])).toBe(1);
    expect(await main(["unknown"])).toBe(1);
  });

  it("reports a model load failure with exit code 2", async () => {
    const dir = mkdtempSync(join(tmpdir(), "cli-"));
    const docs = join(dir, "docs.jsonl");
    writeDocs(docs, [{ doc_id: "d", text: "a" }]);
    const code = await main([
      "embed", "--model", "/nonexistent/model/dir",
      "--input", docs, "--output", join(dir, "out.schb"),
    ]);
    expect(code).toBe(2);
  });
});
