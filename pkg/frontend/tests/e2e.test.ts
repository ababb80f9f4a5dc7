// End-to-end: spawn the real service, mount the console in jsdom, and run
// the bundled investigation walkthrough purely through the UI — open the
// case over pasted CSV, confirm contacts, record the positive test, attach
// the second CDR, publish an advisory, and watch a quarantine alert arrive.
// Afterwards the server's case document must match the projection the
// scripted replay produces, and the client must never have touched an
// undocumented endpoint.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { AddressInfo, createServer } from "node:net";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

import { Api, CaseDoc, requestLog } from "../src/api.js";
import { STATUS_FILL } from "../src/graph.js";
import { ConsoleHandle, initConsole } from "../src/main.js";

// vitest runs from frontend/; the service package lives one level up
const REPO = resolve(process.cwd(), "..");
const TABLE2 = readFileSync(join(REPO, "tests/data/table2.csv"), "utf8");
const TABLE3 = readFileSync(join(REPO, "tests/data/table3.csv"), "utf8");

const FOCAL = "1234567890";
const C = "15151515151";
const D = "17171717171";
const E = "18181818181";

// what the scripted replay leaves behind, minus ids and wall-clock stamps
const FINAL_NODES: Array<[string, string, string]> = [
  ["A", "1234567890", "Patient"],
  ["B", "14141414141", "Unknown"],
  ["C", "15151515151", "Suspect"],
  ["D", "17171717171", "Patient"],
  ["E", "18181818181", "Suspect"],
  ["F", "19191919191", "Unknown"],
  ["G", "12121212121", "Unknown"],
  ["H", "16161616161", "Unknown"],
  ["I", "13131313131", "Unknown"],
  ["J", "21121212121", "Unknown"],
  ["K", "31131313131", "Unknown"],
  ["L", "41141414141", "Unknown"],
  ["M", "51151515151", "Unknown"],
  ["N", "71171717171", "Unknown"],
  ["O", "81181818181", "Unknown"],
  ["P", "91191919191", "Unknown"],
];
const FINAL_EDGES: Array<[string, string, number, number, number, string]> = [
  ["1234567890", "12121212121", 0, 1, 0, "call"],
  ["1234567890", "13131313131", 1, 0, 0, "call"],
  ["1234567890", "14141414141", 2, 1, 0, "call"],
  ["1234567890", "15151515151", 0, 2, 0, "call"],
  ["1234567890", "16161616161", 0, 1, 0, "call"],
  ["1234567890", "17171717171", 1, 1, 0, "call"],
  ["1234567890", "18181818181", 2, 0, 0, "call"],
  ["1234567890", "19191919191", 0, 1, 0, "call"],
  ["17171717171", "21121212121", 1, 1, 0, "call"],
  ["17171717171", "31131313131", 0, 1, 0, "call"],
  ["17171717171", "41141414141", 1, 1, 0, "call"],
  ["17171717171", "51151515151", 0, 1, 0, "call"],
  ["17171717171", "71171717171", 1, 1, 0, "call"],
  ["17171717171", "81181818181", 2, 0, 0, "call"],
  ["17171717171", "91191919191", 0, 1, 0, "call"],
];

// every endpoint the README documents; the client may use nothing else
const DOCUMENTED: Array<[string, RegExp]> = [
  ["GET", /^\/health$/],
  ["GET", /^\/cases$/],
  ["POST", /^\/cases\?[^/]*$/],
  ["GET", /^\/cases\/[^/?]+$/],
  ["GET", /^\/cases\/[^/?]+\/graph(\?.*)?$/],
  ["POST", /^\/cases\/[^/?]+\/confirm$/],
  ["POST", /^\/cases\/[^/?]+\/tests$/],
  ["POST", /^\/cases\/[^/?]+\/cdra(\?.*)?$/],
  ["GET", /^\/cases\/[^/?]+\/paths\/[^/?]+$/],
  ["GET", /^\/advisories$/],
  ["POST", /^\/advisories$/],
  ["POST", /^\/quarantine\/tags$/],
  ["POST", /^\/quarantine\/pings$/],
  ["GET", /^\/alerts\?since=\d+$/],
  ["GET", /^\/ens\/diagnosis-keys$/],
  ["POST", /^\/ens\/diagnosis-keys$/],
  ["POST", /^\/ens\/exposures\/import$/],
];

let proc: ChildProcess;
let base: string;
let store: string;
let serverLog = "";

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function until(test: () => boolean, what: string, timeoutMs = 15_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!test()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(25);
  }
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as AddressInfo).port;
      probe.close(() => resolve(port));
    });
  });
}

function click(el: Element): void {
  el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

async function postJson(url: string, body: unknown): Promise<void> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok) throw new Error(`${url}: HTTP ${response.status}`);
}

beforeAll(async () => {
  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  store = mkdtempSync(join(tmpdir(), "epitrace-ui-"));
  proc = spawn(
    "python3",
    ["-m", "epitrace.cli", "serve", "--port", String(port), "--store", store],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] },
  );
  proc.stdout?.on("data", (chunk: Buffer) => (serverLog += chunk));
  proc.stderr?.on("data", (chunk: Buffer) => (serverLog += chunk));
  const deadline = Date.now() + 45_000;
  for (;;) {
    try {
      if ((await fetch(`${base}/health`)).ok) break;
    } catch {
      /* still booting */
    }
    if (Date.now() > deadline) throw new Error(`service never came up:\n${serverLog}`);
    await sleep(200);
  }
});

afterAll(() => {
  proc?.kill("SIGKILL");
  rmSync(store, { recursive: true, force: true });
});

describe("console against a live service", () => {
  it("runs the whole walkthrough through the UI", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    requestLog.length = 0;

    const api = new Api(base);
    const handle: ConsoleHandle = await initConsole(root, api, { confirmFn: () => true });
    const model = () => handle.model();
    const nodeStatus = (id: string) =>
      model().caseDoc?.web.nodes.find((n) => n.id === id)?.status;

    expect(root.querySelector("#graph-panel")!.textContent).toContain("No case selected");

    // open the case by pasting the index patient's CDR into the form
    const field = (id: string) =>
      root.querySelector<HTMLInputElement | HTMLTextAreaElement>(`#${id}`)!;
    field("open-index").value = FOCAL;
    field("open-case-id").value = "cs1-ui";
    field("open-window").value = "2020-05-01..2020-05-07";
    field("open-csv").value = TABLE2;
    root
      .querySelector<HTMLFormElement>("#open-form")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await until(
      () => model().caseDoc?.case_id === "cs1-ui" && model().pendingActions.length === 0,
      "case to open",
    );

    expect(root.querySelectorAll("#graph-panel g.node")).toHaveLength(9);
    expect(
      root.querySelector(`g[data-node="${FOCAL}"] circle`)!.getAttribute("fill"),
    ).toBe("crimson");
    expect(
      (root.querySelector("#case-select") as HTMLSelectElement).value,
    ).toBe("cs1-ui");

    // confirm the three contacts the investigation flags
    for (const contact of [C, D, E]) {
      click(root.querySelector(`g[data-node="${contact}"]`)!);
      const confirm = root.querySelector<HTMLButtonElement>(
        '#graph-panel button[data-action="confirm"]',
      )!;
      expect(confirm.dataset.patient).toBe(FOCAL);
      click(confirm);
      await until(() => nodeStatus(contact) === "Suspect", `${contact} to turn Suspect`);
    }
    expect(
      root.querySelector(`g[data-node="${C}"] circle`)!.getAttribute("fill"),
    ).toBe("orange");

    // positive test flips D to Patient and queues their CDR analysis
    click(root.querySelector(`g[data-node="${D}"]`)!);
    click(root.querySelector<HTMLButtonElement>(
      '#graph-panel button[data-action="test-positive"]',
    )!);
    await until(
      () => nodeStatus(D) === "Patient" && (model().caseDoc?.pending_cdra ?? []).includes(D),
      "positive test to register",
    );
    expect(root.querySelector("#graph-panel .badge")!.textContent).toBe("CDRA pending");

    // attach D's CDR — selection stuck to D, so the menu offers the form
    const attachCsv = root.querySelector<HTMLTextAreaElement>('[data-role="attach-csv"]')!;
    attachCsv.value = TABLE3.replaceAll("9876543210", D);
    root.querySelector<HTMLInputElement>('[data-role="attach-window"]')!.value =
      "2020-05-01..2020-05-14";
    click(root.querySelector<HTMLButtonElement>('#graph-panel button[data-action="attach"]')!);
    await until(
      () =>
        model().caseDoc?.closed === true &&
        (model().caseDoc?.web.nodes.length ?? 0) === 16 &&
        model().pendingActions.length === 0,
      "case to close over the merged web",
    );
    expect(root.querySelectorAll("#graph-panel g.node")).toHaveLength(16);

    // the map now shows both analysed subscribers; publish the focal's path
    expect(model().pathLayers.map((l) => l.subscriber)).toEqual([FOCAL, D]);
    click(
      root.querySelector<HTMLButtonElement>(
        `#map-panel button[data-action="publish-advisory"][data-subscriber="${FOCAL}"]`,
      )!,
    );
    await until(
      () => model().pathLayers.find((l) => l.subscriber === FOCAL)?.advisoryPublished === true,
      "advisory to publish",
    );
    expect(
      root.querySelector<HTMLButtonElement>(
        `#map-panel button[data-action="publish-advisory"][data-subscriber="${FOCAL}"]`,
      )!.disabled,
    ).toBe(true);
    expect(root.querySelector("#map-panel g.path-layer.advisory")).not.toBeNull();

    const { advisories } = await api.listAdvisories();
    expect(advisories).toHaveLength(1);
    expect(JSON.stringify(advisories[0])).not.toContain(FOCAL);

    // a field device reports a violation; the poll-based feed picks it up
    expect(root.querySelector("#alert-feed .feed-empty")).not.toBeNull();
    await postJson(`${base}/quarantine/tags`, {
      subscriber: D,
      center_lat: 33.6844,
      center_lon: 73.0479,
      active_from: "2020-05-09 00:00:00",
      active_to: "2020-05-23 00:00:00",
    });
    await postJson(`${base}/quarantine/pings`, {
      subscriber: D,
      latitude: 33.7,
      longitude: 73.2,
      at: "2020-05-10 09:00:00",
    });
    await handle.refresh();
    const alertRows = root.querySelectorAll("#alert-feed li");
    expect(alertRows).toHaveLength(1);
    expect(alertRows[0].textContent).toContain(D);
    expect(model().alertCursor).toBe(1);

    // every pixel of status came from the server document
    for (const node of model().caseDoc!.web.nodes) {
      expect(
        root.querySelector(`g[data-node="${node.id}"] circle`)!.getAttribute("fill"),
      ).toBe(STATUS_FILL[node.status]);
    }

    // the server's final document matches the scripted replay's projection
    const doc = (await (await fetch(`${base}/cases/cs1-ui`)).json()) as CaseDoc;
    const nodes = doc.web.nodes
      .map((n): [string, string, string] => [n.label, n.id, n.status])
      .sort();
    const edges = doc.web.edges
      .map((e): [string, string, number, number, number, string] => [
        e.a, e.b, e.out, e.in, e.sms, e.kind,
      ])
      .sort();
    expect(nodes).toEqual(FINAL_NODES);
    expect(edges).toEqual(FINAL_EDGES);
    expect(doc.closed).toBe(true);
    expect(doc.pending_cdra).toEqual([]);
    expect(doc.audit).toHaveLength(6);
    expect(
      (doc.test_log as Array<{ subscriber: string; result: string }>).map((t) => [
        t.subscriber,
        t.result,
      ]),
    ).toEqual([[D, "Positive"]]);

    // and the client never strayed off the documented surface
    expect(requestLog.length).toBeGreaterThan(20);
    for (const { method, path } of requestLog) {
      const allowed = DOCUMENTED.some(([m, re]) => m === method && re.test(path));
      expect.soft(allowed, `undocumented request: ${method} ${path}`).toBe(true);
    }

    handle.stop();
  });
});
