// Client-side mirror of the label-secrecy contract: nothing the subject's
// browser receives before completion may identify a stimulus as real or
// synthetic.  The scan is structural (key names) plus a value check for the
// two label words outside known-safe fields.

const FORBIDDEN_KEY_FRAGMENTS = ["kind", "label", "provenance", "stimulus"];
const LABEL_VALUES = new Set(["real", "synthetic"]);

export function assertNoLabelLeak(payload: unknown, path = "$"): void {
  if (Array.isArray(payload)) {
    payload.forEach((item, i) => assertNoLabelLeak(item, `${path}[${i}]`));
    return;
  }
  if (payload !== null && typeof payload === "object") {
    for (const [key, value] of Object.entries(payload)) {
      const lower = key.toLowerCase();
      for (const fragment of FORBIDDEN_KEY_FRAGMENTS) {
        if (lower.includes(fragment)) {
          throw new Error(`label leak: forbidden key "${key}" at ${path}`);
        }
      }
      assertNoLabelLeak(value, `${path}.${key}`);
    }
    return;
  }
  if (typeof payload === "string" && LABEL_VALUES.has(payload)) {
    throw new Error(`label leak: ground-truth value "${payload}" at ${path}`);
  }
}
