/** Snapshot contract: rendered chart models carry service-reported
 * probabilities verbatim — no client-side math on displayed values. */

import { describe, expect, it } from "vitest";

import type { SessionView } from "../src/api";
import { coarseBars, fineBars, formatRatio, trajectoryStrips } from "../src/render";
import { startModel } from "../src/viewModel";

import createView from "../fixtures/create_table2.json";
import modalSession from "../fixtures/modal_lwh_session.json";

const initial = createView as SessionView;
const steps = modalSession as SessionView[];

describe("fineBars", () => {
  it("renders exactly the service-reported probabilities, in order", () => {
    const bars = fineBars(initial);
    expect(bars).toHaveLength(12);
    bars.forEach((bar, i) => {
      expect(bar.label).toBe(initial.fine_posterior[i].state);
      expect(bar.probability).toBe(initial.fine_posterior[i].probability);
    });
  });

  it("is proportional: width ratios equal probability ratios", () => {
    const bars = fineBars(initial);
    const [a, b] = bars;
    expect(a.widthPct / b.widthPct).toBeCloseTo(a.probability / b.probability, 12);
  });

  it("shows ATE as the tallest initial bar under the expert-frequency priors", () => {
    const bars = fineBars(initial);
    expect(bars[0].label).toBe("ATE");
    for (const bar of bars.slice(1)) {
      expect(bar.probability).toBeLessThanOrEqual(bars[0].probability);
    }
  });

  it("attaches a ratio badge per class", () => {
    for (const bar of fineBars(steps[1])) {
      expect(bar.ratioBadge).toMatch(/^×/);
      const wire = steps[1].change_ratios[bar.label];
      expect(bar.ratioBadge).toBe(formatRatio(wire ?? null));
    }
  });
});

describe("coarseBars", () => {
  it("renders the four coarse groups verbatim", () => {
    const bars = coarseBars(initial);
    expect(bars).toHaveLength(4);
    bars.forEach((bar, i) => {
      expect(bar.probability).toBe(initial.coarse_posterior[i].probability);
    });
  });
});

describe("formatRatio", () => {
  it("renders finite ratios as ×N", () => {
    expect(formatRatio(1.0)).toBe("×1.00");
    expect(formatRatio(2.345)).toBe("×2.35");
  });

  it("renders the null (infinite) flag as the cap badge", () => {
    expect(formatRatio(null)).toBe("×∞");
  });
});

describe("trajectoryStrips", () => {
  it("renders one strip for a fresh session, marked current", () => {
    const strips = trajectoryStrips(startModel(initial));
    expect(strips).toHaveLength(1);
    expect(strips[0].current).toBe(true);
    expect(strips[0].round).toBe(0);
  });

  it("strip values equal service posteriors exactly", () => {
    const strips = trajectoryStrips(startModel(initial));
    strips[0].bars.forEach((bar, i) => {
      expect(bar.probability).toBe(initial.fine_posterior[i].probability);
    });
  });
});
