import { ApiError } from "../api.js";
import type { AppContext, ViewHandle } from "../context.js";
import { clear, el, labeled, textInput } from "../dom.js";
import type { MedicalDelta } from "../types.js";
import { renderMedical } from "./medical.js";

const ENTRY_KINDS: Record<string, { a: string; b: string | null }> = {
  diagnosis: { a: "code", b: "label" },
  medication: { a: "name", b: "dose" },
  treatment_note: { a: "text", b: null },
};

const KIND_TO_FIELD: Record<string, keyof MedicalDelta> = {
  diagnosis: "diagnoses",
  medication: "medications",
  treatment_note: "treatment_notes",
};

/** Doctor workspace: granted patients on the left, one record's medical
 * section plus entry editors on the right. */
export function doctorView(ctx: AppContext): ViewHandle {
  const listBox = el("div", { id: "patient-list" }, el("p", {}, "loading…"));
  const detail = el(
    "div",
    { id: "patient-detail" },
    el("p", { class: "empty" }, "select a patient"),
  );
  let selectedId: string | null = null;

  const kindSelect = el("select", { name: "kind" });
  for (const kind of Object.keys(ENTRY_KINDS)) {
    kindSelect.append(el("option", { value: kind }, kind.replace("_", " ")));
  }
  const inputA = textInput("field_a", { required: "required" });
  const inputB = textInput("field_b");
  const labelA = labeled("code", inputA);
  const labelB = labeled("label", inputB);
  kindSelect.addEventListener("change", () => {
    const shape = ENTRY_KINDS[kindSelect.value];
    (labelA.firstChild as HTMLElement).textContent = shape.a;
    labelB.style.display = shape.b === null ? "none" : "";
    if (shape.b !== null) {
      (labelB.firstChild as HTMLElement).textContent = shape.b;
    }
  });
  const entryForm = el(
    "form",
    { id: "medical-entry" },
    labeled("Entry type", kindSelect),
    labelA,
    labelB,
    el("button", { type: "submit" }, "Add entry"),
  );
  entryForm.addEventListener("submit", (event) => {
    event.preventDefault();
    if (selectedId === null) return;
    const shape = ENTRY_KINDS[kindSelect.value];
    const entry: Record<string, string> = { [shape.a]: inputA.value.trim() };
    if (shape.b !== null && inputB.value.trim() !== "") {
      entry[shape.b] = inputB.value.trim();
    }
    const delta: MedicalDelta = { [KIND_TO_FIELD[kindSelect.value]]: [entry] };
    void submitDelta(delta, () => entryForm.reset());
  });

  const bloodInput = textInput("blood_group", { required: "required" });
  const bloodForm = el(
    "form",
    { id: "blood-group" },
    labeled("Blood group", bloodInput),
    el("button", { type: "submit" }, "Save"),
  );
  bloodForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitDelta({ blood_group: bloodInput.value.trim() });
  });

  const allergiesInput = textInput("allergies", {
    placeholder: "comma separated; replaces the list",
  });
  const allergiesForm = el(
    "form",
    { id: "allergies-form" },
    labeled("Allergies", allergiesInput),
    el("button", { type: "submit" }, "Save"),
  );
  allergiesForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const items = allergiesInput.value
      .split(",")
      .map((item) => item.trim())
      .filter((item) => item !== "");
    void submitDelta({ allergies: items });
  });

  async function submitDelta(
    delta: MedicalDelta,
    onDone?: () => void,
  ): Promise<void> {
    if (selectedId === null) return;
    await ctx.guard(async () => {
      const response = await ctx.api.appendMedical(selectedId as string, delta);
      ctx.showReceipt(response.receipt);
      onDone?.();
      await refreshDetail();
    });
  }

  async function refreshDetail(): Promise<void> {
    if (selectedId === null) {
      clear(detail);
      detail.append(el("p", { class: "empty" }, "select a patient"));
      return;
    }
    let view;
    try {
      view = await ctx.api.doctorGetPatient(selectedId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 403) {
        // grant was revoked under us; stop asking
        selectedId = null;
        clear(detail);
        detail.append(
          el("p", { class: "access-revoked" }, "access to this record was revoked"),
        );
        return;
      }
      throw err;
    }
    clear(detail);
    detail.append(
      el("h3", {}, `${view.first_name} ${view.last_name} (${view.patient_id})`),
      renderMedical(view.medical),
      el("h4", {}, "Add medical entry"),
      entryForm,
      bloodForm,
      allergiesForm,
    );
  }

  async function refresh(): Promise<void> {
    const { patients } = await ctx.api.doctorPatients();
    clear(listBox);
    if (patients.length === 0) {
      listBox.append(el("p", { class: "empty" }, "no patient has granted access"));
    }
    for (const row of patients) {
      const pick = el(
        "button",
        { type: "button", class: "select", "data-id": row.patient_id },
        `${row.first_name} ${row.last_name} (${row.patient_id})`,
      );
      pick.addEventListener("click", () => {
        selectedId = row.patient_id;
        void ctx.guard(refreshDetail);
      });
      listBox.append(pick);
    }
    await refreshDetail();
  }

  const element = el(
    "section",
    { class: "doctor" },
    el("h2", {}, "My patients"),
    listBox,
    detail,
  );
  return { element, refresh };
}
