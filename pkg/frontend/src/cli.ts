#!/usr/bin/env node
/**
 * Embedding exporter CLI.
 *
 * Usage:
 *   schubert-embed embed --model <id> --input docs.jsonl --output embs.schb \
 *       [--chunk-size 512] [--overlap 50] [--layer 12] [--batch 8] \
 *       [--dim 768] [--vocab vocab.txt] [--labels labels.jsonl]
 *
 * The model id "stub" (or "stub:<dim>") selects the deterministic built-in
 * encoder, tokenizing with the WordPiece vocabulary given by --vocab (the
 * bundled demo vocabulary by default).  Any other id is loaded through
 * transformers.js from local files and uses the model's own tokenizer.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath, pathToFileURL } from "node:url";

import { DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP } from "./chunking.js";
import { Encoder, StubEncoder, loadTransformersEncoder } from "./encoder.js";
import { ModelLoadError } from "./errors.js";
import { Document, embedDocuments } from "./embed.js";
import {
  CLS_TOKEN,
  SEP_TOKEN,
  Vocabulary,
  loadVocabulary,
  tokenizeToIds,
} from "./wordpiece.js";

const DEFAULT_VOCAB = join(
  dirname(fileURLToPath(import.meta.url)),
  "..",
  "fixtures",
  "vocab-demo.txt",
);

interface Flags {
  [name: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      throw new UsageError(`unexpected argument: ${arg}`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new UsageError(`flag ${arg} needs a value`);
    }
    flags[arg.slice(2)] = value;
    i++;
  }
  return flags;
}

class UsageError extends Error {}

function usage(): string {
  return (
    "usage: schubert-embed embed --model <id> --input docs.jsonl --output embs.schb\n" +
    "       [--chunk-size 512] [--overlap 50] [--layer 12] [--batch 8]\n" +
    "       [--dim 768] [--vocab vocab.txt] [--labels labels.jsonl]\n"
  );
}

function readDocuments(path: string): Document[] {
  const documents: Document[] = [];
  for (const line of readFileSync(path, "utf-8").split("\n")) {
    if (!line.trim()) continue;
    const row = JSON.parse(line) as { doc_id: string; text?: string };
    documents.push({ docId: String(row.doc_id), text: String(row.text ?? "") });
  }
  return documents;
}

function readLabels(path: string): Map<string, number> {
  const labels = new Map<string, number>();
  for (const line of readFileSync(path, "utf-8").split("\n")) {
    if (!line.trim()) continue;
    const row = JSON.parse(line) as {
      doc_id?: string;
      article_id?: string;
      score?: number;
      status?: string;
    };
    if ((row.status ?? "ok") !== "ok") continue;
    const docId = row.doc_id ?? row.article_id;
    if (docId && row.score !== undefined && row.score !== null) {
      labels.set(String(docId), Number(row.score));
    }
  }
  return labels;
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== "embed") {
    process.stderr.write(usage());
    return 1;
  }
  let flags: Flags;
  try {
    flags = parseFlags(argv.slice(1));
  } catch (error) {
    if (error instanceof UsageError) {
      process.stderr.write(`${error.message}\n${usage()}`);
      return 1;
    }
    throw error;
  }
  for (const required of ["model", "input", "output"]) {
    if (!(required in flags)) {
      process.stderr.write(`missing --${required}\n${usage()}`);
      return 1;
    }
  }

  const chunkSize = Number(flags["chunk-size"] ?? DEFAULT_CHUNK_SIZE);
  const overlap = Number(flags["overlap"] ?? DEFAULT_OVERLAP);
  const batchSize = Number(flags["batch"] ?? 8);
  const layerFlag = flags["layer"] !== undefined ? Number(flags["layer"]) : undefined;

  try {
    let encoder: Encoder;
    let tokenize: (text: string) => number[] | Promise<number[]>;
    let clsId: number;
    let sepId: number;

    const stubMatch = /^stub(?::(\d+))?$/.exec(flags["model"]);
    if (stubMatch) {
      const dim = stubMatch[1] ? Number(stubMatch[1]) : Number(flags["dim"] ?? 768);
      encoder = new StubEncoder(dim);
      const vocab: Vocabulary = loadVocabulary(flags["vocab"] ?? DEFAULT_VOCAB);
      const cls = vocab.ids.get(CLS_TOKEN);
      const sep = vocab.ids.get(SEP_TOKEN);
      if (cls === undefined || sep === undefined) {
        throw new ModelLoadError(`vocabulary lacks ${CLS_TOKEN}/${SEP_TOKEN} tokens`);
      }
      clsId = cls;
      sepId = sep;
      tokenize = (text) => tokenizeToIds(text, vocab);
    } else {
      const loaded = await loadTransformersEncoder(flags["model"]);
      encoder = loaded;
      tokenize = (text) => loaded.tokenizeToIds(text);
      const specials = await loaded.tokenizeToIds(`${CLS_TOKEN} ${SEP_TOKEN}`);
      if (specials.length !== 2) {
        throw new ModelLoadError("cannot determine special token ids for this model");
      }
      [clsId, sepId] = specials;
    }

    const documents = readDocuments(flags["input"]);
    const labels = flags["labels"] ? readLabels(flags["labels"]) : undefined;
    const result = await embedDocuments({
      documents,
      encoder,
      tokenize,
      clsId,
      sepId,
      outputPath: flags["output"],
      chunkSize,
      overlap,
      layer: layerFlag,
      batchSize,
      labels,
    });
    process.stdout.write(
      `${result.written} documents embedded to ${flags["output"]}` +
        (result.skipped ? ` (${result.skipped} skipped)` : "") +
        "\n",
    );
    return 0;
  } catch (error) {
    if (error instanceof ModelLoadError) {
      process.stderr.write(`model load failed: ${error.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(error as Error).message}\n`);
    return 2;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
