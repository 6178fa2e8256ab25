import type { AppContext, ViewHandle } from "../context.js";
import { clear, el, fmtTimestamp, labeled, shortHash, textInput } from "../dom.js";
import type { BlockView, HistoryEvent, TxLookup } from "../types.js";

function infoRow(label: string, value: string): HTMLElement {
  return el("tr", {}, el("th", {}, label), el("td", {}, value));
}

/**
 * Explorer panel. Chain info is open to every signed-in role; block and
 * transaction lookup mirror the gateway's admin-only gate, so for other
 * roles the inputs are disabled rather than allowed to fail.
 */
export function explorerView(ctx: AppContext, prefillTx?: string): ViewHandle {
  const isAdmin = ctx.session.role === "admin";
  const infoBox = el("table", { id: "chain-info" });

  // -- block lookup --
  const blockInput = el("input", { type: "number", name: "number", min: "0" });
  const blockButton = el("button", { type: "submit" }, "Look up block");
  const blockResult = el("div", { id: "block-result" });
  const blockForm = el(
    "form",
    { id: "block-lookup" },
    labeled("Block number", blockInput),
    blockButton,
  );

  // -- tx lookup --
  const txInput = textInput("tx_id", { value: prefillTx ?? "" });
  const txButton = el("button", { type: "submit" }, "Look up transaction");
  const txResult = el("div", { id: "tx-result" });
  const txForm = el("form", { id: "tx-lookup" }, labeled("Tx ID", txInput), txButton);

  if (!isAdmin) {
    for (const control of [blockInput, blockButton, txInput, txButton]) {
      control.setAttribute("disabled", "disabled");
    }
  }

  function renderBlock(block: BlockView): void {
    clear(blockResult);
    const txList = el("ul", {});
    block.transactions.forEach((tx, i) => {
      txList.append(
        el(
          "li",
          {},
          `${shortHash(tx.tx_id)} · ${tx.chaincode_id}.${tx.function} · ${block.validity[i]}`,
        ),
      );
    });
    blockResult.append(
      el("h4", {}, `Block ${block.number}`),
      el("p", {}, el("strong", {}, "Hash: "), shortHash(block.block_hash)),
      el("p", {}, el("strong", {}, "Previous: "), shortHash(block.prev_hash)),
      el("p", {}, el("strong", {}, "Transactions: "), String(block.transactions.length)),
      txList,
    );
  }

  function renderTx(found: TxLookup): void {
    clear(txResult);
    txResult.append(
      el("h4", {}, `Transaction ${shortHash(found.transaction.tx_id)}`),
      el("p", {}, el("strong", {}, "Block: "), String(found.block_num)),
      el("p", {}, el("strong", {}, "Validity: "), found.validity),
      el(
        "p",
        {},
        el("strong", {}, "Call: "),
        `${found.transaction.chaincode_id}.${found.transaction.function}`,
      ),
    );
  }

  blockForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      renderBlock(await ctx.api.explorerBlock(Number(blockInput.value)));
    });
  });
  txForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      renderTx(await ctx.api.explorerTx(txInput.value.trim()));
    });
  });

  // -- record history --
  const historyInput = textInput("patient_id", { required: "required" });
  if (ctx.session.role === "patient") {
    historyInput.value = ctx.session.subjectId ?? "";
    historyInput.setAttribute("readonly", "readonly");
  }
  const historyTable = el("table", { id: "history" });
  const historyForm = el(
    "form",
    { id: "history-form" },
    labeled("Patient ID", historyInput),
    el("button", { type: "submit" }, "Show history"),
  );

  function renderHistory(events: HistoryEvent[]): void {
    clear(historyTable);
    historyTable.append(
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          el("th", {}, "block"),
          el("th", {}, "function"),
          el("th", {}, "when"),
          el("th", {}, "tx"),
          el("th", {}, "status"),
        ),
      ),
    );
    const body = el("tbody", {});
    for (const event of events) {
      body.append(
        el(
          "tr",
          {},
          el("td", {}, String(event.block_num)),
          el("td", {}, event.function),
          el("td", {}, fmtTimestamp(event.timestamp)),
          el("td", { title: event.tx_id }, shortHash(event.tx_id)),
          el("td", {}, event.deleted ? "deleted" : "recorded"),
        ),
      );
    }
    historyTable.append(body);
  }

  historyForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.guard(async () => {
      const { events } = await ctx.api.patientHistory(historyInput.value.trim());
      renderHistory(events);
    });
  });

  async function refresh(): Promise<void> {
    const info = await ctx.api.explorerInfo();
    clear(infoBox);
    infoBox.append(
      infoRow("Height", String(info.height)),
      infoRow("Latest block hash", shortHash(info.latest_block_hash)),
      infoRow("Total transactions", String(info.total_transactions)),
      infoRow("Valid", String(info.valid_transactions)),
      infoRow("Invalid", String(info.invalid_transactions)),
      ...Object.entries(info.transactions_by_chaincode).map(([cc, count]) =>
        infoRow(`· ${cc}`, String(count)),
      ),
    );
  }

  const sections: Array<Node | string> = [
    el("h2", {}, "Explorer"),
    infoBox,
    el("h3", {}, "Block lookup"),
  ];
  if (!isAdmin) {
    sections.push(el("p", { class: "role-note" }, "block and transaction lookup are for administrators"));
  }
  sections.push(blockForm, blockResult, el("h3", {}, "Transaction lookup"), txForm, txResult);
  sections.push(el("h3", {}, "Record history"), historyForm, historyTable);

  const element = el("section", { class: "explorer" }, ...sections);

  if (isAdmin && prefillTx !== undefined && prefillTx !== "") {
    // arriving via a receipt link: resolve it straight away
    void ctx.guard(async () => {
      renderTx(await ctx.api.explorerTx(prefillTx));
    });
  }

  return { element, refresh };
}
