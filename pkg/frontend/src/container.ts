/**
 * SCHB embedding container: the binary interchange file the trainer reads.
 *
 * Little-endian layout:
 *   header:   magic "SCHB" | u32 version | u64 item count
 *   per item: u16 doc id byte length | doc id UTF-8 bytes
 *             u32 nChunks | u32 dim | nChunks*dim float32 (chunk-major)
 *             u8 label flag | (float64 label when flag = 1)
 */

import { readFileSync, writeFileSync } from "node:fs";

import { FormatError } from "./errors.js";

export const MAGIC = Buffer.from("SCHB", "ascii");
export const FORMAT_VERSION = 1;

export interface EmbeddingItem {
  docId: string;
  /** nChunks rows of dim float values. */
  vectors: number[][];
  label?: number | null;
}

export function encodeContainer(items: readonly EmbeddingItem[]): Buffer {
  const parts: Buffer[] = [];
  const header = Buffer.alloc(16);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeBigUInt64LE(BigInt(items.length), 8);
  parts.push(header);

  for (const item of items) {
    const nChunks = item.vectors.length;
    if (nChunks < 1) {
      throw new RangeError(`item ${item.docId} has no chunk vectors`);
    }
    const dim = item.vectors[0].length;
    const docId = Buffer.from(item.docId, "utf-8");
    if (docId.length > 0xffff) {
      throw new RangeError(`doc id too long: ${docId.length} bytes`);
    }
    const head = Buffer.alloc(2 + docId.length + 8);
    head.writeUInt16LE(docId.length, 0);
    docId.copy(head, 2);
    head.writeUInt32LE(nChunks, 2 + docId.length);
    head.writeUInt32LE(dim, 2 + docId.length + 4);
    parts.push(head);

    const matrix = Buffer.alloc(4 * nChunks * dim);
    let offset = 0;
    for (const row of item.vectors) {
      if (row.length !== dim) {
        throw new RangeError(`ragged chunk matrix in item ${item.docId}`);
      }
      for (const value of row) {
        matrix.writeFloatLE(Math.fround(value), offset);
        offset += 4;
      }
    }
    parts.push(matrix);

    if (item.label === null || item.label === undefined) {
      parts.push(Buffer.from([0]));
    } else {
      const tail = Buffer.alloc(9);
      tail.writeUInt8(1, 0);
      tail.writeDoubleLE(item.label, 1);
      parts.push(tail);
    }
  }
  return Buffer.concat(parts);
}

export function writeContainer(path: string, items: readonly EmbeddingItem[]): number {
  writeFileSync(path, encodeContainer(items));
  return items.length;
}

class Cursor {
  offset = 0;
  constructor(private readonly data: Buffer) {}

  take(n: number, what: string): Buffer {
    if (this.offset + n > this.data.length) {
      throw new FormatError(
        `truncated file while reading ${what}: wanted ${n} bytes, ` +
          `got ${this.data.length - this.offset}`,
        this.offset,
      );
    }
    const slice = this.data.subarray(this.offset, this.offset + n);
    this.offset += n;
    return slice;
  }

  get exhausted(): boolean {
    return this.offset >= this.data.length;
  }
}

export function decodeContainer(data: Buffer): EmbeddingItem[] {
  const cursor = new Cursor(data);
  const magic = cursor.take(4, "magic");
  if (!magic.equals(MAGIC)) {
    throw new FormatError(`bad magic ${JSON.stringify(magic.toString("latin1"))}`, 0);
  }
  const version = cursor.take(4, "version").readUInt32LE(0);
  if (version !== FORMAT_VERSION) {
    throw new FormatError(`unsupported format version ${version}`, 4);
  }
  const count = Number(cursor.take(8, "item count").readBigUInt64LE(0));

  const items: EmbeddingItem[] = [];
  for (let index = 0; index < count; index++) {
    const idLength = cursor.take(2, `item ${index} id length`).readUInt16LE(0);
    const docId = cursor.take(idLength, `item ${index} doc id`).toString("utf-8");
    const shape = cursor.take(8, `item ${index} shape`);
    const nChunks = shape.readUInt32LE(0);
    const dim = shape.readUInt32LE(4);
    if (nChunks < 1 || dim < 1) {
      throw new FormatError(
        `item ${index} has invalid shape (${nChunks}, ${dim})`,
        cursor.offset - 8,
      );
    }
    const matrix = cursor.take(4 * nChunks * dim, `item ${index} vectors`);
    const vectors: number[][] = [];
    for (let chunk = 0; chunk < nChunks; chunk++) {
      const row = new Array<number>(dim);
      for (let i = 0; i < dim; i++) {
        row[i] = matrix.readFloatLE(4 * (chunk * dim + i));
      }
      vectors.push(row);
    }
    const flag = cursor.take(1, `item ${index} label flag`).readUInt8(0);
    let label: number | null = null;
    if (flag === 1) {
      label = cursor.take(8, `item ${index} label`).readDoubleLE(0);
    } else if (flag !== 0) {
      throw new FormatError(`item ${index} has invalid label flag ${flag}`, cursor.offset - 1);
    }
    items.push({ docId, vectors, label });
  }
  if (!cursor.exhausted) {
    throw new FormatError("trailing bytes after last item", cursor.offset);
  }
  return items;
}

export function readContainer(path: string): EmbeddingItem[] {
  return decodeContainer(readFileSync(path));
}
