/** Pure chart-model builders. Probabilities pass through verbatim from the
 * service view; the only arithmetic here is layout scaling of bar widths. */

import type { SessionView } from "./api";
import type { SessionViewModel } from "./viewModel";

export interface Bar {
  label: string;
  /** Service-reported probability, untouched. */
  probability: number;
  /** Layout width; proportional to probability. */
  widthPct: number;
  ratioBadge: string;
}

export interface TrajectoryStrip {
  round: number;
  bars: Bar[];
  current: boolean;
}

/** The infinite-ratio flag travels as null and renders as the cap badge. */
export function formatRatio(ratio: number | null): string {
  if (ratio === null) return "×∞";
  return `×${ratio.toFixed(2)}`;
}

function toBars(
  entries: { state: string; probability: number }[],
  ratios?: Record<string, number | null>,
): Bar[] {
  return entries.map((e) => ({
    label: e.state,
    probability: e.probability,
    widthPct: e.probability * 100,
    ratioBadge: ratios ? formatRatio(ratios[e.state] ?? null) : "",
  }));
}

export function fineBars(view: SessionView): Bar[] {
  return toBars(view.fine_posterior, view.change_ratios);
}

export function coarseBars(view: SessionView): Bar[] {
  return toBars(view.coarse_posterior);
}

/** One mini-chart per round; the latest round is highlighted. */
export function trajectoryStrips(model: SessionViewModel): TrajectoryStrip[] {
  const last = model.trajectory.length - 1;
  return model.trajectory.map((posterior, round) => ({
    round,
    bars: toBars(posterior),
    current: round === last,
  }));
}
