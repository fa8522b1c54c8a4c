/** Deterministic cluster colors: fixed categorical palette keyed by cluster
 * id, so the same clustering renders identically across reloads. Noise is
 * always gray. */

export const NOISE_COLOR = "#9e9e9e";

export const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#aec7e8",
  "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
  "#f7b6d2", "#dbdb8d", "#9edae5", "#393b79", "#ad494a",
];

export function clusterColor(clusterId: number): string {
  if (clusterId < 0) return NOISE_COLOR;
  return PALETTE[clusterId % PALETTE.length];
}
