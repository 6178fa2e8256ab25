import type { AppContext, ViewHandle } from "../context.js";
import { clear, el, labeled, textInput } from "../dom.js";
import type { PatientRecord } from "../types.js";
import { renderMedical } from "./medical.js";

const PERSONAL_FIELDS = [
  "first_name",
  "last_name",
  "date_of_birth",
  "phone",
  "address",
  "emergency_contact",
] as const;

/**
 * Patient console: own record, personal-details editor, password change,
 * and the grant/revoke list. Forms are filled once; polling refreshes the
 * displayed record and grant status without clobbering edits in progress.
 */
export function patientView(ctx: AppContext): ViewHandle {
  const patientId = ctx.session.subjectId ?? "";
  const summary = el("div", { id: "record-summary" }, el("p", {}, "loading…"));
  const medicalBox = el("div", { id: "medical-view" });
  const grantsList = el("ul", { id: "grants" });
  let prefilled = false;

  const personalInputs = PERSONAL_FIELDS.map((name) => textInput(name));
  const personalForm = el(
    "form",
    { id: "personal" },
    ...PERSONAL_FIELDS.map((name, i) =>
      labeled(name.replace(/_/g, " "), personalInputs[i]),
    ),
    el("button", { type: "submit" }, "Save details"),
  );
  personalForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const delta: Record<string, string> = {};
    PERSONAL_FIELDS.forEach((name, i) => {
      delta[name] = personalInputs[i].value.trim();
    });
    void ctx.guard(async () => {
      const response = await ctx.api.updatePersonal(patientId, delta);
      ctx.showReceipt(response.receipt);
      await refresh();
    });
  });

  const oldPassword = el("input", {
    type: "password",
    name: "old_password",
    autocomplete: "current-password",
    required: "required",
  });
  const newPassword = el("input", {
    type: "password",
    name: "new_password",
    autocomplete: "new-password",
    required: "required",
  });
  const passwordForm = el(
    "form",
    { id: "password" },
    labeled("Current password", oldPassword),
    labeled("New password", newPassword),
    el("button", { type: "submit" }, "Change password"),
  );
  passwordForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      const response = await ctx.api.changePassword(
        patientId,
        oldPassword.value,
        newPassword.value,
      );
      ctx.showReceipt(response.receipt);
      passwordForm.reset();
    });
  });

  const grantInput = textInput("doctor_id", { required: "required" });
  const grantForm = el(
    "form",
    { id: "grant" },
    labeled("Doctor ID", grantInput),
    el("button", { type: "submit" }, "Grant access"),
  );
  grantForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      const response = await ctx.api.grantAccess(
        patientId,
        grantInput.value.trim(),
      );
      ctx.showReceipt(response.receipt);
      grantForm.reset();
      await refresh();
    });
  });

  function renderSummary(record: PatientRecord): void {
    clear(summary);
    const p = record.personal;
    summary.append(
      el("h3", {}, `${p.first_name} ${p.last_name}`.trim() || record.patient_id),
      el("p", {}, el("strong", {}, "Patient ID: "), record.patient_id),
      el("p", {}, el("strong", {}, "Date of birth: "), p.date_of_birth || "—"),
      el("p", {}, el("strong", {}, "Phone: "), p.phone || "—"),
      el("p", {}, el("strong", {}, "Address: "), p.address || "—"),
      el("p", {}, el("strong", {}, "Emergency contact: "), p.emergency_contact || "—"),
    );
  }

  function renderGrants(granted: string[]): void {
    clear(grantsList);
    if (granted.length === 0) {
      grantsList.append(el("li", { class: "empty" }, "no doctor has access"));
      return;
    }
    for (const doctorId of granted) {
      const revoke = el(
        "button",
        { type: "button", class: "revoke", "data-id": doctorId },
        "Revoke",
      );
      revoke.addEventListener("click", () => {
        void ctx.guard(async () => {
          const response = await ctx.api.revokeAccess(patientId, doctorId);
          ctx.showReceipt(response.receipt);
          await refresh();
        });
      });
      grantsList.append(
        el("li", {}, el("span", { class: "doctor-id" }, doctorId), " ", revoke),
      );
    }
  }

  async function refresh(): Promise<void> {
    const record = await ctx.api.getPatient(patientId);
    renderSummary(record);
    renderGrants(record.permission_granted);
    clear(medicalBox);
    medicalBox.append(renderMedical(record.medical));
    if (!prefilled) {
      PERSONAL_FIELDS.forEach((name, i) => {
        personalInputs[i].value = record.personal[name] ?? "";
      });
      prefilled = true;
    }
  }

  const element = el(
    "section",
    { class: "patient" },
    el("h2", {}, "My record"),
    summary,
    el("h3", {}, "Medical record"),
    medicalBox,
    el("h3", {}, "Doctors with access"),
    grantsList,
    grantForm,
    el("h3", {}, "Personal details"),
    personalForm,
    el("h3", {}, "Password"),
    passwordForm,
  );
  return { element, refresh };
}
