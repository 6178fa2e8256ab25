import type { AppContext, ViewHandle } from "../context.js";
import { el, labeled, textInput } from "../dom.js";

export function loginView(ctx: AppContext): ViewHandle {
  const subject = textInput("subject_id", {
    autocomplete: "username",
    required: "required",
  });
  const password = el("input", {
    type: "password",
    name: "password",
    autocomplete: "current-password",
    required: "required",
  });
  const form = el(
    "form",
    { id: "login-form" },
    labeled("User ID", subject),
    labeled("Password", password),
    el("button", { type: "submit" }, "Sign in"),
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      const response = await ctx.api.login(subject.value.trim(), password.value);
      ctx.session.start(response);
    });
  });
  const element = el(
    "section",
    { class: "login" },
    el("h2", {}, "Sign in"),
    form,
  );
  return { element, refresh: async () => {} };
}
