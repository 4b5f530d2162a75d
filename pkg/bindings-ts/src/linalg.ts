/**
 * Small dense linear algebra for the processor: the buffer never exceeds
 * `window` rows, so the right singular vectors of the centered buffer are
 * recovered from the window-by-window Gram matrix with a cyclic Jacobi
 * eigendecomposition (accurate to a few ulps for these sizes).
 */

export interface EigenPairs {
  /** Eigenvalues in non-increasing order. */
  values: Float64Array;
  /** Column-major eigenvectors: vectors[j] pairs with values[j]. */
  vectors: Float64Array[];
}

/** Symmetric eigendecomposition by cyclic Jacobi rotations. */
export function jacobiEigh(matrix: Float64Array[], maxSweeps = 64): EigenPairs {
  const n = matrix.length;
  const a = matrix.map((row) => Float64Array.from(row));
  const v: Float64Array[] = [];
  for (let i = 0; i < n; i++) {
    const row = new Float64Array(n);
    row[i] = 1;
    v.push(row);
  }

  let total = 0;
  for (let p = 0; p < n; p++) for (let q = 0; q < n; q++) total += a[p][q] * a[p][q];

  for (let sweep = 0; sweep < maxSweeps; sweep++) {
    let off = 0;
    for (let p = 0; p < n; p++) {
      for (let q = p + 1; q < n; q++) off += a[p][q] * a[p][q];
    }
    if (off <= 1e-32 * total || off === 0) break;
    for (let p = 0; p < n - 1; p++) {
      for (let q = p + 1; q < n; q++) {
        const apq = a[p][q];
        if (apq === 0) continue;
        const theta = (a[q][q] - a[p][p]) / (2 * apq);
        const t =
          Math.sign(theta || 1) / (Math.abs(theta) + Math.sqrt(theta * theta + 1));
        const c = 1 / Math.sqrt(t * t + 1);
        const s = t * c;
        for (let i = 0; i < n; i++) {
          const aip = a[i][p];
          const aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (let i = 0; i < n; i++) {
          const api = a[p][i];
          const aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (let i = 0; i < n; i++) {
          const vip = v[i][p];
          const viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }

  const order = Array.from({ length: n }, (_, i) => i).sort(
    (x, y) => a[y][y] - a[x][x] || x - y,
  );
  const values = new Float64Array(n);
  const vectors: Float64Array[] = [];
  order.forEach((src, dst) => {
    values[dst] = a[src][src];
    const column = new Float64Array(n);
    for (let i = 0; i < n; i++) column[i] = v[i][src];
    vectors.push(column);
  });
  return { values, vectors };
}

export function dot(x: Float64Array, y: Float64Array): number {
  let acc = 0;
  for (let i = 0; i < x.length; i++) acc += x[i] * y[i];
  return acc;
}

/** In-place modified Gram-Schmidt; vectors are assumed near-orthonormal. */
export function orthonormalize(columns: Float64Array[]): void {
  for (let j = 0; j < columns.length; j++) {
    const column = columns[j];
    for (let i = 0; i < j; i++) {
      const proj = dot(columns[i], column);
      for (let t = 0; t < column.length; t++) column[t] -= proj * columns[i][t];
    }
    const norm = Math.sqrt(dot(column, column));
    for (let t = 0; t < column.length; t++) column[t] /= norm;
  }
}
