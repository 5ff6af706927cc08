/**
 * Overlapping chunking of subword id sequences.
 *
 * Mirrors the trainer-side rule exactly: chunk k spans
 * [k*stride, min(k*stride + chunkSize, n)) with stride = chunkSize - overlap,
 * emitted from k = 0 until the first chunk whose end reaches n.  An input of
 * exactly chunkSize ids yields a single chunk.
 */

export const DEFAULT_CHUNK_SIZE = 512;
export const DEFAULT_OVERLAP = 50;

export interface ChunkSpan {
  readonly start: number;
  readonly end: number; // exclusive
}

export function chunkSpans(
  n: number,
  chunkSize: number = DEFAULT_CHUNK_SIZE,
  overlap: number = DEFAULT_OVERLAP,
): ChunkSpan[] {
  if (n < 1) throw new RangeError("cannot chunk an empty id sequence");
  if (overlap < 0 || overlap >= chunkSize) {
    throw new RangeError(
      `overlap must satisfy 0 <= overlap < chunkSize, got ${overlap}/${chunkSize}`,
    );
  }
  const stride = chunkSize - overlap;
  const spans: ChunkSpan[] = [];
  let start = 0;
  for (;;) {
    const end = Math.min(start + chunkSize, n);
    spans.push({ start, end });
    if (end >= n) return spans;
    start += stride;
  }
}

export function chunkIds(
  ids: readonly number[],
  chunkSize: number = DEFAULT_CHUNK_SIZE,
  overlap: number = DEFAULT_OVERLAP,
): number[][] {
  return chunkSpans(ids.length, chunkSize, overlap).map((span) =>
    ids.slice(span.start, span.end),
  );
}

/** Closed-form chunk count: 1 if n <= size, else 1 + ceil((n - size)/stride). */
export function chunkCount(
  n: number,
  chunkSize: number = DEFAULT_CHUNK_SIZE,
  overlap: number = DEFAULT_OVERLAP,
): number {
  if (n < 1) throw new RangeError("cannot chunk an empty id sequence");
  if (n <= chunkSize) return 1;
  return 1 + Math.ceil((n - chunkSize) / (chunkSize - overlap));
}
