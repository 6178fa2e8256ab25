import type { ApiClient } from "./api.js";
import type { Session } from "./session.js";
import type { Receipt } from "./types.js";

export type BannerKind = "error" | "success" | "info";

/** What every view gets from the shell. */
export interface AppContext {
  api: ApiClient;
  session: Session;
  /** Replace the banner; never touches the active view. */
  notify(kind: BannerKind, ...content: Array<Node | string>): void;
  /**
   * Run an API action. 401 on a live session signs the user out; other
   * API errors become inline banners. Resolves undefined on failure.
   */
  guard<T>(action: () => Promise<T>): Promise<T | undefined>;
  /** Success banner with the receipt's tx id linked into the explorer. */
  showReceipt(receipt: Receipt): void;
  openExplorerTx(txId: string): void;
}

export interface ViewHandle {
  element: HTMLElement;
  /** Reload remote data; forms and user input stay untouched. */
  refresh(): Promise<void>;
}
