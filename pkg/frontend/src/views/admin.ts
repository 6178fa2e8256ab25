import type { AppContext, ViewHandle } from "../context.js";
import { clear, el, labeled, textInput } from "../dom.js";

const PERSONAL_FIELDS = [
  "first_name",
  "last_name",
  "date_of_birth",
  "phone",
  "address",
  "emergency_contact",
] as const;

/** Admin dashboard: names-only roster plus create/delete/register forms. */
export function adminView(ctx: AppContext): ViewHandle {
  const rosterBody = el("tbody", {});
  const roster = el(
    "table",
    { id: "roster" },
    el(
      "thead",
      {},
      el(
        "tr",
        {},
        el("th", {}, "Patient ID"),
        el("th", {}, "First name"),
        el("th", {}, "Last name"),
        el("th", {}, ""),
      ),
    ),
    rosterBody,
  );

  async function refresh(): Promise<void> {
    const { patients } = await ctx.api.listPatients();
    clear(rosterBody);
    for (const row of patients) {
      const remove = el(
        "button",
        { type: "button", class: "delete", "data-id": row.patient_id },
        "Delete",
      );
      remove.addEventListener("click", () => {
        void ctx.guard(async () => {
          const response = await ctx.api.deletePatient(row.patient_id);
          ctx.showReceipt(response.receipt);
          await refresh();
        });
      });
      rosterBody.append(
        el(
          "tr",
          {},
          el("td", {}, row.patient_id),
          el("td", {}, row.first_name),
          el("td", {}, row.last_name),
          el("td", {}, remove),
        ),
      );
    }
  }

  const patientId = textInput("patient_id", { required: "required" });
  const patientPassword = el("input", {
    type: "password",
    name: "password",
    autocomplete: "new-password",
    required: "required",
  });
  const personalInputs = PERSONAL_FIELDS.map((name) => textInput(name));
  const createForm = el(
    "form",
    { id: "create-patient" },
    labeled("Patient ID", patientId),
    labeled("Password", patientPassword),
    ...PERSONAL_FIELDS.map((name, i) =>
      labeled(name.replace(/_/g, " "), personalInputs[i]),
    ),
    el("button", { type: "submit" }, "Create patient"),
  );
  createForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const personal: Record<string, string> = {};
    PERSONAL_FIELDS.forEach((name, i) => {
      const value = personalInputs[i].value.trim();
      if (value !== "") personal[name] = value;
    });
    void ctx.guard(async () => {
      const response = await ctx.api.createPatient(
        patientId.value.trim(),
        patientPassword.value,
        personal,
      );
      ctx.showReceipt(response.receipt);
      createForm.reset();
      await refresh();
    });
  });

  const doctorId = textInput("doctor_id", { required: "required" });
  const doctorName = textInput("display_name", { required: "required" });
  const doctorDept = textInput("department", { required: "required" });
  const doctorPassword = el("input", {
    type: "password",
    name: "password",
    autocomplete: "new-password",
    required: "required",
  });
  const doctorForm = el(
    "form",
    { id: "register-doctor" },
    labeled("Doctor ID", doctorId),
    labeled("Display name", doctorName),
    labeled("Department", doctorDept),
    labeled("Password", doctorPassword),
    el("button", { type: "submit" }, "Register doctor"),
  );
  doctorForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      const response = await ctx.api.registerDoctor(
        doctorId.value.trim(),
        doctorName.value.trim(),
        doctorDept.value.trim(),
        doctorPassword.value,
      );
      ctx.showReceipt(response.receipt);
      doctorForm.reset();
    });
  });

  const element = el(
    "section",
    { class: "admin" },
    el("h2", {}, "Patients"),
    roster,
    el("h3", {}, "Create patient"),
    createForm,
    el("h3", {}, "Register doctor"),
    doctorForm,
  );
  return { element, refresh };
}
