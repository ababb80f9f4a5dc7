// Console controller: owns the view model, wires the panels to the API,
// and re-fetches after every mutation so the screen always shows server
// state. A failed mutation triggers a refetch with a retry prompt rather
// than trusting whatever the client thought it knew.

import { Api, ApiError } from "./api.js";
import { AlertFeed } from "./alerts.js";
import { GraphHandlers, renderGraphPanel } from "./graph.js";
import { renderMapPanel } from "./map.js";
import { ViewModel, beginAction, emptyModel, endAction, refreshCase } from "./state.js";

export type ConsoleOptions = {
  pollMs?: number;
  confirmFn?: (message: string) => boolean;
};

export type ConsoleHandle = {
  refresh(): Promise<void>;
  stop(): void;
  model(): ViewModel;
};

const SKELETON = `
  <header>
    <h1>epitrace console</h1>
    <span id="action-queue"></span>
  </header>
  <div id="banner" hidden></div>
  <section id="case-bar">
    <label>case <select id="case-select"></select></label>
    <details id="open-details">
      <summary>open a new case</summary>
      <form id="open-form">
        <input id="open-index" placeholder="index subscriber" required />
        <input id="open-case-id" placeholder="case id (optional)" />
        <input id="open-window" placeholder="window START..END" />
        <textarea id="open-csv" placeholder="paste the index patient's CDR (CSV)"></textarea>
        <button id="open-submit" type="submit">open case</button>
      </form>
    </details>
  </section>
  <main>
    <section><h2>contact web</h2><div id="graph-panel"></div></section>
    <section><h2>movements</h2><div id="map-panel"></div></section>
    <section><h2>quarantine alerts</h2><div id="alert-feed"></div></section>
  </main>
`;

export async function initConsole(
  root: HTMLElement,
  api: Api,
  options: ConsoleOptions = {},
): Promise<ConsoleHandle> {
  root.innerHTML = SKELETON;
  const el = (id: string) => root.querySelector<HTMLElement>(`#${id}`)!;

  let model = emptyModel();
  let caseId: string | null = null;
  let selectedNode: string | null = null;
  const feed = new AlertFeed();

  function showBanner(text: string, isError = true): void {
    const banner = el("banner");
    banner.hidden = false;
    banner.className = isError ? "error-banner" : "notice-banner";
    banner.textContent = text;
  }

  function hideBanner(): void {
    el("banner").hidden = true;
  }

  function renderQueue(): void {
    el("action-queue").textContent = model.pendingActions.length
      ? `working: ${model.pendingActions.join(", ")}`
      : "";
  }

  function renderPanels(): void {
    renderQueue();
    const graphPanel = el("graph-panel");
    if (model.caseDoc) {
      renderGraphPanel(graphPanel, model.caseDoc, handlers, selectedNode);
    } else {
      graphPanel.textContent = "No case selected.";
    }
    renderMapPanel(
      el("map-panel"),
      model.pathLayers,
      (subscriber) => runAction(`advisory ${subscriber}`, async () => {
        if (!caseId) return;
        await api.publishAdvisory(caseId, subscriber);
        model = {
          ...model,
          pathLayers: model.pathLayers.map((layer) =>
            layer.subscriber === subscriber
              ? { ...layer, advisoryPublished: true }
              : layer,
          ),
        };
      }),
      options.confirmFn,
    );
    feed.render(el("alert-feed"));
  }

  async function refresh(): Promise<void> {
    if (caseId) model = await refreshCase(api, model, caseId);
    await feed.poll(api);
    model = { ...model, alertCursor: feed.cursor };
    renderPanels();
  }

  async function runAction(label: string, action: () => Promise<void>): Promise<void> {
    model = beginAction(model, label);
    renderQueue();
    try {
      hideBanner(); // clear a stale error; the action may post its own notice
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        // the server refused: our snapshot may be stale — refetch and retry
        showBanner(`${err.message} — screen refreshed from the server, try again`);
      } else {
        showBanner(`request failed: ${(err as Error).message}`);
      }
    } finally {
      model = endAction(model, label);
      await refresh().catch(() => showBanner("refresh failed — service unreachable"));
    }
  }

  const handlers: GraphHandlers = {
    onSelect(subscriber) {
      selectedNode = subscriber;
      renderPanels();
    },
    onConfirm(patient, contact) {
      void runAction(`confirm ${contact}`, async () => {
        if (caseId) await api.confirm(caseId, patient, [contact]);
      });
    },
    onTest(subscriber, result) {
      void runAction(`test ${subscriber}`, async () => {
        if (caseId) await api.recordTest(caseId, subscriber, result);
      });
    },
    onAttach(subscriber, csv, window) {
      void runAction(`attach ${subscriber}`, async () => {
        if (caseId) {
          await api.attachCdra({
            caseId,
            patient: subscriber,
            csv,
            window: window || undefined,
          });
        }
      });
    },
  };

  async function reloadCaseList(): Promise<void> {
    const select = el("case-select") as HTMLSelectElement;
    const { cases } = await api.listCases();
    select.textContent = "";
    for (const id of ["", ...cases]) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id || "— pick —";
      select.appendChild(option);
    }
    if (caseId && cases.includes(caseId)) select.value = caseId;
  }

  (el("case-select") as HTMLSelectElement).addEventListener("change", (event) => {
    caseId = (event.target as HTMLSelectElement).value || null;
    selectedNode = null;
    void refresh().catch((err) => showBanner(String(err)));
  });

  el("open-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const value = (id: string) => (el(id) as HTMLInputElement | HTMLTextAreaElement).value;
    void runAction("open case", async () => {
      const { case: caseDoc, diagnostics } = await api.openCase({
        index: value("open-index"),
        caseId: value("open-case-id") || undefined,
        window: value("open-window") || undefined,
        csv: value("open-csv"),
      });
      caseId = caseDoc.case_id;
      selectedNode = null;
      await reloadCaseList();
      if (diagnostics.length) {
        showBanner(`opened with ${diagnostics.length} rejected row(s)`, false);
      }
    });
  });

  await reloadCaseList();
  await refresh();
  if (options.pollMs) feed.start(api, el("alert-feed"), options.pollMs);

  return {
    refresh,
    stop: () => feed.stop(),
    model: () => model,
  };
}

// browser boot; tests import initConsole directly instead
const boot = typeof document !== "undefined" && document.getElementById("app");
if (boot) {
  void initConsole(boot as HTMLElement, new Api(""), { pollMs: 3000 });
}
