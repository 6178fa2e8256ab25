import { el, fmtTimestamp } from "../dom.js";
import type { MedicalEntry, MedicalSection } from "../types.js";

const LIST_COLUMNS: Record<string, string[]> = {
  diagnoses: ["code", "label"],
  medications: ["name", "dose"],
  treatment_notes: ["text"],
};

function entryTable(title: string, columns: string[], entries: MedicalEntry[]): HTMLElement {
  const box = el("div", { class: "medical-list" }, el("h4", {}, title));
  if (entries.length === 0) {
    box.append(el("p", { class: "empty" }, "none recorded"));
    return box;
  }
  const head = el(
    "tr",
    {},
    ...columns.map((c) => el("th", {}, c.replace("_", " "))),
    el("th", {}, "recorded by"),
    el("th", {}, "at"),
  );
  const body = el("tbody", {});
  for (const entry of entries) {
    body.append(
      el(
        "tr",
        {},
        ...columns.map((c) => el("td", {}, String(entry[c] ?? ""))),
        el("td", { class: "attribution" }, entry.recorded_by),
        el("td", {}, fmtTimestamp(entry.recorded_at)),
      ),
    );
  }
  box.append(el("table", {}, el("thead", {}, head), body));
  return box;
}

/**
 * Render the medical section field by field. Every list entry shows its
 * provenance stamp, so patients see which doctor wrote what.
 */
export function renderMedical(medical: MedicalSection): HTMLElement {
  const box = el("div", { class: "medical" });
  box.append(
    el(
      "p",
      {},
      el("strong", {}, "Blood group: "),
      medical.blood_group === "" ? "not recorded" : medical.blood_group,
    ),
    el(
      "p",
      {},
      el("strong", {}, "Allergies: "),
      medical.allergies.length === 0 ? "none recorded" : medical.allergies.join(", "),
    ),
  );
  for (const [field, columns] of Object.entries(LIST_COLUMNS)) {
    const entries = medical[field as keyof MedicalSection] as MedicalEntry[];
    box.append(entryTable(field.replace("_", " "), columns, entries));
  }
  return box;
}
