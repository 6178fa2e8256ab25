import { ApiClient, ApiError } from "./api.js";
import type { AppContext, BannerKind, ViewHandle } from "./context.js";
import { clear, el, fmtCountdown, shortHash } from "./dom.js";
import type { Session } from "./session.js";
import type { Receipt } from "./types.js";
import { adminView } from "./views/admin.js";
import { doctorView } from "./views/doctor.js";
import { explorerView } from "./views/explorer.js";
import { loginView } from "./views/login.js";
import { patientView } from "./views/patient.js";

export interface AppOptions {
  /** Background refresh period; 0 disables polling (tests drive refresh). */
  pollMs?: number;
}

export interface App {
  root: HTMLElement;
  render(): void;
  /** Refresh the active view once; 401 signs out, other errors stay quiet. */
  refresh(): Promise<void>;
  destroy(): void;
}

type Tab = "dashboard" | "explorer";

export function createApp(
  root: HTMLElement,
  api: ApiClient,
  session: Session,
  options: AppOptions = {},
): App {
  const pollMs = options.pollMs ?? 2000;
  let tab: Tab = "dashboard";
  let pendingTx: string | undefined;
  let current: ViewHandle | null = null;
  let timer: ReturnType<typeof setInterval> | null = null;

  function notify(kind: BannerKind, ...content: Array<Node | string>): void {
    const banner = root.querySelector<HTMLElement>("#banner");
    if (banner === null) return;
    clear(banner);
    banner.className = `banner ${kind}`;
    banner.dataset.kind = kind;
    const dismiss = el("button", { class: "dismiss", type: "button" }, "×");
    dismiss.addEventListener("click", () => {
      clear(banner);
      banner.className = "banner";
      delete banner.dataset.kind;
    });
    banner.append(...content, dismiss);
  }

  async function guard<T>(action: () => Promise<T>): Promise<T | undefined> {
    try {
      return await action();
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 401 && session.active) {
          session.clear(); // re-renders to the login view first
          notify("error", "session expired or rejected, sign in again");
        } else {
          notify("error", `${err.code}: ${err.message}`);
        }
        return undefined;
      }
      notify("error", err instanceof Error ? err.message : String(err));
      return undefined;
    }
  }

  function showReceipt(receipt: Receipt): void {
    const link = el(
      "button",
      {
        type: "button",
        class: "tx-link",
        title: receipt.tx_id,
        "data-tx-id": receipt.tx_id,
      },
      `tx ${shortHash(receipt.tx_id)} · block ${receipt.block_num}`,
    );
    link.addEventListener("click", () => openExplorerTx(receipt.tx_id));
    notify("success", "committed ", link, ` — ${receipt.validity}`);
  }

  function openExplorerTx(txId: string): void {
    pendingTx = txId;
    tab = "explorer";
    render();
    void refreshQuietly();
  }

  const ctx: AppContext = {
    api,
    session,
    notify,
    guard,
    showReceipt,
    openExplorerTx,
  };

  function buildView(): ViewHandle {
    if (tab === "explorer") {
      const view = explorerView(ctx, pendingTx);
      pendingTx = undefined;
      return view;
    }
    switch (session.role) {
      case "admin":
        return adminView(ctx);
      case "doctor":
        return doctorView(ctx);
      default:
        return patientView(ctx);
    }
  }

  function navButton(target: Tab, label: string): HTMLButtonElement {
    const button = el(
      "button",
      {
        type: "button",
        "data-tab": target,
        class: tab === target ? "active" : "",
      },
      label,
    );
    button.addEventListener("click", () => {
      tab = target;
      render();
      void refreshQuietly();
    });
    return button;
  }

  function render(): void {
    stopTimer();
    clear(root);
    if (!session.active) {
      tab = "dashboard";
      current = loginView(ctx);
      root.append(
        el("header", {}, el("h1", {}, "ehrchain")),
        el("div", { id: "banner", class: "banner" }),
        el("main", { id: "view" }, current.element),
      );
      return;
    }
    const countdown = el(
      "span",
      { id: "countdown", title: "session time remaining" },
      fmtCountdown(session.remainingSeconds()),
    );
    const logout = el("button", { id: "logout", type: "button" }, "Sign out");
    logout.addEventListener("click", () => session.clear());
    current = buildView();
    root.append(
      el(
        "header",
        {},
        el("h1", {}, "ehrchain"),
        el("span", { id: "whoami" }, `${session.subjectId} · ${session.role}`),
        countdown,
        logout,
      ),
      el("nav", {}, navButton("dashboard", "Dashboard"), navButton("explorer", "Explorer")),
      el("div", { id: "banner", class: "banner" }),
      el("main", { id: "view" }, current.element),
    );
    startTimer();
  }

  async function refreshQuietly(): Promise<void> {
    // note what was on screen before session.active runs the expiry check,
    // because an expiry emits a change event that re-renders immediately
    const hadView = current !== null && root.querySelector("#login-form") === null;
    if (!session.active) {
      if (hadView) {
        if (root.querySelector("#login-form") === null) render();
        notify("info", "session expired, sign in again");
      }
      return;
    }
    const countdown = root.querySelector<HTMLElement>("#countdown");
    if (countdown !== null) {
      countdown.textContent = fmtCountdown(session.remainingSeconds());
    }
    if (current === null) return;
    try {
      await current.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        session.clear();
        notify("error", "session expired or rejected, sign in again");
      }
      // other background failures stay quiet; actions surface their own
    }
  }

  function startTimer(): void {
    if (pollMs > 0 && timer === null) {
      timer = setInterval(() => {
        void refreshQuietly();
      }, pollMs);
    }
  }

  function stopTimer(): void {
    if (timer !== null) {
      clearInterval(timer);
      timer = null;
    }
  }

  const unsubscribe = session.onChange(() => {
    render();
    void refreshQuietly();
  });

  return {
    root,
    render,
    refresh: refreshQuietly,
    destroy: () => {
      stopTimer();
      unsubscribe();
      clear(root);
      current = null;
    },
  };
}
