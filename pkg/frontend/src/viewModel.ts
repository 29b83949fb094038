/** Pure session view-model transitions. The trajectory records one fine
 * posterior per round, starting with the initial prior, so its length is
 * always history length + 1. What-if previews live in a separate overlay
 * slot and never touch the trajectory. */

import type { PosteriorEntry, SessionView } from "./api";

export interface SessionViewModel {
  view: SessionView;
  /** Fine posteriors per round; [0] is the initial prior. */
  trajectory: PosteriorEntry[][];
  selectedType: number | null;
  pendingState: string | null;
  whatIfPreview: SessionView | null;
}

export function assertTrajectoryInvariant(model: SessionViewModel): void {
  if (model.trajectory.length !== model.view.history.length + 1) {
    throw new Error(
      `trajectory length ${model.trajectory.length} != ` +
        `history length ${model.view.history.length} + 1`,
    );
  }
}

/** Model for a freshly created session (empty history). */
export function startModel(view: SessionView): SessionViewModel {
  const model: SessionViewModel = {
    view,
    trajectory: [view.fine_posterior],
    selectedType: view.recommendation,
    pendingState: null,
    whatIfPreview: null,
  };
  assertTrajectoryInvariant(model);
  return model;
}

/** Fold a committed answer's response view into the model. */
export function commitAnswer(
  model: SessionViewModel,
  view: SessionView,
): SessionViewModel {
  const next: SessionViewModel = {
    ...model,
    view,
    trajectory: [...model.trajectory, view.fine_posterior],
    selectedType: view.recommendation,
    pendingState: null,
    whatIfPreview: null,
  };
  assertTrajectoryInvariant(next);
  return next;
}

/** Show a what-if response as a transient overlay; the committed view and
 * trajectory are untouched. */
export function previewWhatIf(
  model: SessionViewModel,
  view: SessionView,
): SessionViewModel {
  const next: SessionViewModel = { ...model, whatIfPreview: view };
  assertTrajectoryInvariant(next);
  return next;
}

export function clearWhatIf(model: SessionViewModel): SessionViewModel {
  return { ...model, whatIfPreview: null };
}

export function selectType(
  model: SessionViewModel,
  typeId: number,
): SessionViewModel {
  return { ...model, selectedType: typeId, pendingState: null };
}

export function setPendingState(
  model: SessionViewModel,
  state: string,
): SessionViewModel {
  return { ...model, pendingState: state };
}

/** Answer states the active scheme accepts for a type (3-item types have no
 * Medium band). The roster mirrors the service's domain configuration. */
export const ITEM_COUNTS: Record<number, number> = {
  1: 5,
  2: 5,
  3: 4,
  4: 4,
  5: 3,
  6: 3,
};

export function answerOptions(scheme: string, typeId: number): string[] {
  const n = ITEM_COUNTS[typeId];
  if (n === undefined) throw new Error(`unknown item type ${typeId}`);
  if (scheme === "count") {
    return Array.from({ length: n + 1 }, (_, i) => String(n - i));
  }
  return n > 3 ? ["H", "M", "L"] : ["H", "L"];
}
