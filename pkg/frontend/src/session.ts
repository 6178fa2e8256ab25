import type { LoginResponse, Role } from "./types.js";

interface SessionData {
  token: string;
  subjectId: string;
  role: Role;
  expiresAt: number; // epoch milliseconds
}

/**
 * In-memory session with expiry. Reading the token past its expiry clears
 * the session, so a stale tab falls back to the login view instead of
 * sending dead tokens.
 */
export class Session {
  private data: SessionData | null = null;
  private listeners: Array<() => void> = [];

  constructor(private readonly now: () => number = () => Date.now()) {}

  start(login: LoginResponse): void {
    this.data = {
      token: login.token,
      subjectId: login.subject_id,
      role: login.role,
      expiresAt: this.now() + login.expires_in * 1000,
    };
    this.emit();
  }

  clear(): void {
    if (this.data === null) return;
    this.data = null;
    this.emit();
  }

  private expireIfDue(): void {
    if (this.data !== null && this.now() >= this.data.expiresAt) {
      this.clear();
    }
  }

  get active(): boolean {
    this.expireIfDue();
    return this.data !== null;
  }

  get token(): string | null {
    this.expireIfDue();
    return this.data?.token ?? null;
  }

  get role(): Role | null {
    this.expireIfDue();
    return this.data?.role ?? null;
  }

  get subjectId(): string | null {
    this.expireIfDue();
    return this.data?.subjectId ?? null;
  }

  /** Whole seconds until expiry; 0 when inactive. */
  remainingSeconds(): number {
    this.expireIfDue();
    if (this.data === null) return 0;
    return Math.max(0, Math.floor((this.data.expiresAt - this.now()) / 1000));
  }

  onChange(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((fn) => fn !== listener);
    };
  }

  private emit(): void {
    for (const listener of [...this.listeners]) {
      listener();
    }
  }
}
