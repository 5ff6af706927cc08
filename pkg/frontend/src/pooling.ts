/** Mean pooling of per-token vectors into one chunk vector. */

/**
 * Component-wise arithmetic mean over the positions where `include` is true
 * (all positions when `include` is omitted).  Special-token and padding
 * positions are excluded by passing them as false.
 */
export function meanPool(
  tokenVectors: readonly (readonly number[])[],
  include?: readonly boolean[],
): number[] {
  if (tokenVectors.length === 0) {
    throw new RangeError("meanPool requires at least one vector");
  }
  const dim = tokenVectors[0].length;
  const sum = new Array<number>(dim).fill(0);
  let count = 0;
  tokenVectors.forEach((vector, position) => {
    if (vector.length !== dim) {
      throw new RangeError(`ragged vector dimensions: ${vector.length} vs ${dim}`);
    }
    if (include && !include[position]) return;
    for (let i = 0; i < dim; i++) sum[i] += vector[i];
    count += 1;
  });
  if (count === 0) {
    throw new RangeError("meanPool: every position was excluded");
  }
  return sum.map((value) => value / count);
}
