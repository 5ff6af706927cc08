/**
 * Document embedding pipeline: subword ids -> overlapping chunks -> encoder
 * hidden states -> mean-pooled chunk vectors -> SCHB container.
 *
 * Sequence-start/end tokens are fed to the encoder with every chunk but are
 * excluded from pooling, as is padding; only content positions contribute to
 * a chunk's vector.
 */

import { chunkIds, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP } from "./chunking.js";
import { EmbeddingItem, writeContainer } from "./container.js";
import { Encoder } from "./encoder.js";
import { EncodingError } from "./errors.js";
import { meanPool } from "./pooling.js";

export interface Document {
  docId: string;
  text: string;
}

export interface EmbedJob {
  documents: Iterable<Document>;
  encoder: Encoder;
  /** Text to subword ids, without special tokens. */
  tokenize: (text: string) => number[] | Promise<number[]>;
  /** Ids of the sequence-start/end tokens wrapped around every chunk. */
  clsId: number;
  sepId: number;
  outputPath: string;
  chunkSize?: number;
  overlap?: number;
  /** Encoder layer to read; defaults to the encoder's final layer. */
  layer?: number;
  /** Chunks per encoder call. */
  batchSize?: number;
  /** Optional labels (citation scores) keyed by doc id. */
  labels?: ReadonlyMap<string, number>;
}

export interface EmbedResult {
  written: number;
  skipped: number;
}

/** Embed one document into its chunk-vector matrix. */
export async function embedDocument(
  text: string,
  job: Pick<EmbedJob, "encoder" | "tokenize" | "clsId" | "sepId"> & {
    chunkSize: number;
    overlap: number;
    layer: number;
    batchSize: number;
  },
): Promise<number[][]> {
  const ids = await job.tokenize(text);
  if (ids.length === 0) {
    throw new EncodingError("document has no subword tokens");
  }
  const chunks = chunkIds(ids, job.chunkSize, job.overlap);
  const vectors: number[][] = [];
  for (let start = 0; start < chunks.length; start += job.batchSize) {
    const batch = chunks
      .slice(start, start + job.batchSize)
      .map((chunk) => [job.clsId, ...chunk, job.sepId]);
    const encoded = await job.encoder.encodeBatch(batch, job.layer);
    encoded.forEach((tokenVectors, index) => {
      const include = batch[index].map(
        (_, position) => position !== 0 && position !== batch[index].length - 1,
      );
      vectors.push(meanPool(tokenVectors, include));
    });
  }
  return vectors;
}

/** Run the full job; documents that fail to encode are skipped and tallied. */
export async function embedDocuments(job: EmbedJob): Promise<EmbedResult> {
  const chunkSize = job.chunkSize ?? DEFAULT_CHUNK_SIZE;
  const overlap = job.overlap ?? DEFAULT_OVERLAP;
  const layer = job.layer ?? job.encoder.finalLayer;
  const batchSize = job.batchSize ?? 8;

  const items: EmbeddingItem[] = [];
  let skipped = 0;
  for (const document of job.documents) {
    try {
      const vectors = await embedDocument(document.text, {
        encoder: job.encoder,
        tokenize: job.tokenize,
        clsId: job.clsId,
        sepId: job.sepId,
        chunkSize,
        overlap,
        layer,
        batchSize,
      });
      items.push({
        docId: document.docId,
        vectors,
        label: job.labels?.get(document.docId) ?? null,
      });
    } catch (error) {
      if (error instanceof EncodingError) {
        skipped += 1;
        continue;
      }
      throw error;
    }
  }
  const written = writeContainer(job.outputPath, items);
  return { written, skipped };
}
