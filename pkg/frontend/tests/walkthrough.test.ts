/**
 * End-to-end walkthrough against a real gateway process.
 *
 * Boots a fresh network with the operator CLI, serves it on a free port,
 * and drives the actual UI (two independent app instances, like two browser
 * tabs) through the full care loop: admin creates a patient, the patient
 * grants a doctor, the doctor writes a diagnosis, the patient revokes, and
 * the doctor's next look is denied. The explorer must account for exactly
 * the four committed transactions.
 */
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { createApp, type App } from "../src/app.js";
import { Session } from "../src/session.js";

const ADMIN_ID = "ADMIN001";
const ADMIN_PASSWORD = "admin-pw";
const DOCTOR_ID = "DOC001"; // seeded by the demo roster
const DOCTOR_PASSWORD = "doc001-pw";
const PATIENT_ID = "PID900";
const PATIENT_PASSWORD = "pid900-pw";

const DEFINITION = `network_name: walkthrough-net
ca:
  ca_id: ca.root
orgs:
  - name: org1.providers
    peer_id: peer0.org1
    admitted_roles: [admin, doctor]
  - name: org2.patients
    peer_id: peer1.org2
    admitted_roles: [patient]
channel:
  channel_id: ehr-channel
  endorsement_policy: {rule: all}
  max_block_txs: 10
  block_timeout_ms: 150
admin:
  id: ${ADMIN_ID}
  password: ${ADMIN_PASSWORD}
gateway:
  host: 127.0.0.1
  port: 8460
  token_ttl_seconds: 1800
`;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = net.createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      const { port } = address;
      server.close(() => resolve(port));
    });
    server.on("error", reject);
  });
}

async function waitFor<T>(
  probe: () => T | null | undefined | false,
  what: string,
  timeoutMs = 15_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const value = probe();
      if (value !== null && value !== undefined && value !== false) {
        return value;
      }
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error(
    `timed out waiting for ${what}${lastError ? `: ${String(lastError)}` : ""}`,
  );
}

interface Tab {
  root: HTMLDivElement;
  app: App;
  session: Session;
}

function openTab(base: string): Tab {
  const session = new Session();
  const api = new ApiClient(base, () => session.token);
  const root = document.createElement("div");
  document.body.append(root);
  const app = createApp(root, api, session, { pollMs: 0 });
  app.render();
  return { root, app, session };
}

function q<T extends Element = HTMLElement>(root: HTMLElement, selector: string): T {
  const node = root.querySelector<Element>(selector);
  if (node === null) throw new Error(`missing element: ${selector}`);
  return node as T;
}

function setValue(root: HTMLElement, selector: string, value: string): void {
  q<HTMLInputElement>(root, selector).value = value;
}

function submit(root: HTMLElement, selector: string): void {
  q<HTMLFormElement>(root, selector).dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
}

async function signIn(tab: Tab, id: string, password: string): Promise<void> {
  await waitFor(() => tab.root.querySelector("#login-form"), "login form");
  setValue(tab.root, "#login-form input[name=subject_id]", id);
  setValue(tab.root, "#login-form input[name=password]", password);
  submit(tab.root, "#login-form");
  await waitFor(
    () => tab.root.querySelector("#whoami")?.textContent?.includes(id),
    `signed-in header for ${id}`,
  );
}

function signOut(tab: Tab): void {
  q<HTMLButtonElement>(tab.root, "#logout").click();
}

async function readTotalTransactions(tab: Tab): Promise<number> {
  q<HTMLButtonElement>(tab.root, 'nav [data-tab="explorer"]').click();
  const row = await waitFor(() => {
    for (const tr of Array.from(tab.root.querySelectorAll("#chain-info tr"))) {
      if (tr.querySelector("th")?.textContent === "Total transactions") {
        return tr;
      }
    }
    return null;
  }, "chain info table");
  const total = Number(row.querySelector("td")?.textContent);
  q<HTMLButtonElement>(tab.root, 'nav [data-tab="dashboard"]').click();
  return total;
}

async function waitForReceipt(tab: Tab): Promise<void> {
  await waitFor(
    () =>
      tab.root.querySelector('#banner[data-kind="success"] .tx-link') !== null,
    "transaction receipt banner",
  );
}

let baseDir: string;
let server: ChildProcess | null = null;
let serverLog = "";
let base = "";

beforeAll(async () => {
  baseDir = mkdtempSync(join(tmpdir(), "ehrchain-webui-"));
  const definitionPath = join(baseDir, "network.yaml");
  const dataDir = join(baseDir, "net");
  writeFileSync(definitionPath, DEFINITION);
  execFileSync("python3", [
    "-m", "ehrchain.cli", "bootstrap",
    "--config", definitionPath,
    "--data-dir", dataDir,
  ]);
  execFileSync("python3", ["-m", "ehrchain.cli", "seed-demo", "--data-dir", dataDir]);

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    ["-m", "ehrchain.cli", "serve", "--data-dir", dataDir, "--bind", `127.0.0.1:${port}`],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverLog += String(chunk)));
  server.stderr?.on("data", (chunk) => (serverLog += String(chunk)));

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      await fetch(`${base}/explorer/info`);
      break; // any HTTP answer means the gateway is up
    } catch {
      if (Date.now() > deadline) {
        throw new Error(`gateway never came up\n${serverLog}`);
      }
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
});

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(baseDir, { recursive: true, force: true });
});

describe("full care loop through the real gateway", () => {
  it(
    "admin, patient, and doctor complete a grant/write/revoke cycle adding exactly four transactions",
    { timeout: 120_000 },
    async () => {
      const main = openTab(base); // admin, then the patient
      const clinic = openTab(base); // the doctor's own tab

      // --- admin: baseline count, then create the patient (+1) ---
      await signIn(main, ADMIN_ID, ADMIN_PASSWORD);
      const before = await readTotalTransactions(main);
      expect(before).toBeGreaterThan(0); // bootstrap + demo seed already on chain

      await waitFor(() => main.root.querySelector("#create-patient"), "admin form");
      setValue(main.root, "#create-patient input[name=patient_id]", PATIENT_ID);
      setValue(main.root, "#create-patient input[name=password]", PATIENT_PASSWORD);
      setValue(main.root, "#create-patient input[name=first_name]", "Ursula");
      setValue(main.root, "#create-patient input[name=last_name]", "Kemp");
      submit(main.root, "#create-patient");
      await waitForReceipt(main);
      await waitFor(
        () =>
          main.root.querySelector(
            `#roster button.delete[data-id="${PATIENT_ID}"]`,
          ) !== null,
        "new patient in the roster",
      );

      // --- patient: sign in and grant the doctor (+1) ---
      signOut(main);
      await signIn(main, PATIENT_ID, PATIENT_PASSWORD);
      await waitFor(
        () => main.root.querySelector("#record-summary h3")?.textContent,
        "patient record summary",
      );
      expect(q(main.root, "#record-summary").textContent).toContain("Ursula Kemp");
      setValue(main.root, "#grant input[name=doctor_id]", DOCTOR_ID);
      submit(main.root, "#grant");
      await waitForReceipt(main);
      await waitFor(
        () => q(main.root, "#grants").textContent?.includes(DOCTOR_ID),
        "grant listed",
      );

      // --- doctor: open the record and write a diagnosis (+1) ---
      await signIn(clinic, DOCTOR_ID, DOCTOR_PASSWORD);
      const select = await waitFor(
        () =>
          clinic.root.querySelector<HTMLButtonElement>(
            `#patient-list button.select[data-id="${PATIENT_ID}"]`,
          ),
        "granted patient in the doctor's list",
      );
      select.click();
      await waitFor(
        () =>
          clinic.root
            .querySelector("#patient-detail h3")
            ?.textContent?.includes("Ursula Kemp"),
        "patient detail",
      );
      setValue(clinic.root, "#medical-entry input[name=field_a]", "I10");
      setValue(clinic.root, "#medical-entry input[name=field_b]", "hypertension");
      submit(clinic.root, "#medical-entry");
      await waitForReceipt(clinic);
      await waitFor(
        () => q(clinic.root, "#patient-detail").textContent?.includes("I10"),
        "diagnosis visible to its author",
      );
      expect(
        q(clinic.root, "#patient-detail .attribution").textContent,
      ).toBe(DOCTOR_ID);

      // --- patient sees the attributed entry, then revokes (+1) ---
      await main.app.refresh();
      await waitFor(
        () => q(main.root, "#medical-view").textContent?.includes("I10"),
        "diagnosis visible to the patient",
      );
      expect(q(main.root, "#medical-view .attribution").textContent).toBe(DOCTOR_ID);

      // the write also shows up in the patient's own history panel
      q<HTMLButtonElement>(main.root, 'nav [data-tab="explorer"]').click();
      await waitFor(() => main.root.querySelector("#history-form"), "history form");
      expect(
        q<HTMLInputElement>(main.root, "#history-form input[name=patient_id]").value,
      ).toBe(PATIENT_ID);
      submit(main.root, "#history-form");
      await waitFor(
        () =>
          Array.from(main.root.querySelectorAll("#history tbody tr")).some((row) =>
            row.textContent?.includes("updateMedicalDetails"),
          ),
        "medical write in the patient's history",
      );
      q<HTMLButtonElement>(main.root, 'nav [data-tab="dashboard"]').click();

      const revoke = await waitFor(
        () =>
          main.root.querySelector<HTMLButtonElement>(
            `#grants button.revoke[data-id="${DOCTOR_ID}"]`,
          ),
        "revoke control",
      );
      revoke.click();
      await waitForReceipt(main);
      await waitFor(
        () => q(main.root, "#grants").textContent?.includes("no doctor has access"),
        "grant removed",
      );

      // --- doctor's next look is denied and the UI says so ---
      await clinic.app.refresh();
      await waitFor(
        () =>
          q(clinic.root, "#patient-detail").textContent?.includes(
            "access to this record was revoked",
          ),
        "revocation notice in the doctor tab",
      );
      await waitFor(
        () =>
          q(clinic.root, "#patient-list").textContent?.includes(
            "no patient has granted access",
          ),
        "doctor's patient list emptied",
      );

      // --- admin: the explorer accounts for exactly the four commits ---
      signOut(main);
      await signIn(main, ADMIN_ID, ADMIN_PASSWORD);
      const after = await readTotalTransactions(main);
      expect(after - before).toBe(4);

      main.app.destroy();
      clinic.app.destroy();
    },
  );
});
