/**
 * Rating form state: exactly 14 correct/incorrect entries plus one 0-5
 * satisfaction score in half-point steps. Submission is a single atomic
 * payload; the form refuses to build one until every field is valid.
 */

export const TRAIT_COUNT = 14;

export const SATISFACTION_MIN = 0;
export const SATISFACTION_MAX = 5;
export const SATISFACTION_STEP = 0.5;

export function satisfactionSteps(): number[] {
  const steps: number[] = [];
  for (let v = SATISFACTION_MIN; v <= SATISFACTION_MAX; v += SATISFACTION_STEP) {
    steps.push(v);
  }
  return steps;
}

export function isValidSatisfaction(value: number): boolean {
  return (
    Number.isFinite(value) &&
    value >= SATISFACTION_MIN &&
    value <= SATISFACTION_MAX &&
    Number.isInteger(value / SATISFACTION_STEP)
  );
}

export interface RatingPayload {
  ratings: (0 | 1)[];
  satisfaction: number;
}

export class RatingForm {
  readonly entries: (0 | 1 | null)[] = Array(TRAIT_COUNT).fill(null);
  satisfaction: number | null = null;

  setEntry(index: number, value: 0 | 1): void {
    if (!Number.isInteger(index) || index < 0 || index >= TRAIT_COUNT) {
      throw new RangeError(`entry index must be 0..${TRAIT_COUNT - 1}, got ${index}`);
    }
    if (value !== 0 && value !== 1) {
      throw new RangeError(`rating must be 0 or 1, got ${value}`);
    }
    this.entries[index] = value;
  }

  setSatisfaction(value: number): void {
    if (!isValidSatisfaction(value)) {
      throw new RangeError(
        `satisfaction must be ${SATISFACTION_MIN}..${SATISFACTION_MAX} in steps of ${SATISFACTION_STEP}, got ${value}`,
      );
    }
    this.satisfaction = value;
  }

  errors(): string[] {
    const out: string[] = [];
    const missing = this.entries
      .map((v, i) => (v === null ? i : -1))
      .filter((i) => i >= 0);
    if (missing.length > 0) {
      out.push(`${missing.length} of ${TRAIT_COUNT} trait ratings missing`);
    }
    if (this.satisfaction === null) {
      out.push("satisfaction score missing");
    }
    return out;
  }

  isComplete(): boolean {
    return this.errors().length === 0;
  }

  /** Fraction of entries marked correct, for the pre-submission preview. */
  previewAccuracy(): number | null {
    if (this.entries.some((v) => v === null)) return null;
    const ones = this.entries.filter((v) => v === 1).length;
    return ones / TRAIT_COUNT;
  }

  payload(): RatingPayload {
    const errs = this.errors();
    if (errs.length > 0) {
      throw new Error(`rating form incomplete: ${errs.join("; ")}`);
    }
    return {
      ratings: this.entries.map((v) => v as 0 | 1),
      satisfaction: this.satisfaction as number,
    };
  }
}
