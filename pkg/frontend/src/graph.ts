// Contact-web panel: SVG rendering of the server's graph document plus the
// per-node action menu. Layout is a deterministic function of the sorted
// document (index patient centered, everyone else on a circle in label
// order), so a given snapshot always renders the same scene.

import { CaseDoc, EdgeDoc, NodeDoc } from "./api.js";

// same palette the server uses for its DOT export
export const STATUS_FILL: Record<string, string> = {
  Patient: "crimson",
  Suspect: "orange",
  Cleared: "palegreen",
  Unknown: "lightgray",
};

export type GraphHandlers = {
  onSelect(subscriber: string | null): void;
  onConfirm(patient: string, contact: string): void;
  onTest(subscriber: string, result: "Positive" | "Negative"): void;
  onAttach(subscriber: string, csv: string, window: string): void;
};

type Point = { x: number; y: number };

const SIZE = 560;
const RADIUS = 220;

export function layoutPositions(caseDoc: CaseDoc): Map<string, Point> {
  const center = { x: SIZE / 2, y: SIZE / 2 };
  const positions = new Map<string, Point>();
  positions.set(caseDoc.index, center);
  const ring = caseDoc.web.nodes
    .filter((n) => n.id !== caseDoc.index)
    .sort((a, b) => (a.label < b.label ? -1 : 1));
  ring.forEach((node, i) => {
    const angle = (2 * Math.PI * i) / ring.length - Math.PI / 2;
    positions.set(node.id, {
      x: center.x + RADIUS * Math.cos(angle),
      y: center.y + RADIUS * Math.sin(angle),
    });
  });
  return positions;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [name, value] of Object.entries(attrs)) el.setAttribute(name, value);
  return el;
}

function edgeLine(edge: EdgeDoc, a: Point, b: Point): SVGGElement {
  const group = svgEl("g", { class: `edge kind-${edge.kind}` });
  const line = svgEl("line", {
    x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
    stroke: "#888",
  });
  if (edge.kind === "proximity") line.setAttribute("stroke-dasharray", "6 4");
  group.appendChild(line);
  const label = svgEl("text", {
    x: String((a.x + b.x) / 2),
    y: String((a.y + b.y) / 2 - 4),
    class: "edge-label",
    "text-anchor": "middle",
  });
  label.textContent = `${edge.out}/${edge.in}`;
  group.appendChild(label);
  return group;
}

function nodeMarker(
  node: NodeDoc,
  at: Point,
  caseDoc: CaseDoc,
  selected: string | null,
  handlers: GraphHandlers,
): SVGGElement {
  const group = svgEl("g", {
    class: `node status-${node.status}${node.id === caseDoc.index ? " focal" : ""}`,
    "data-node": node.id,
  });
  const circle = svgEl("circle", {
    cx: String(at.x), cy: String(at.y),
    r: node.id === caseDoc.index ? "26" : "20",
    fill: STATUS_FILL[node.status] ?? "lightgray",
    stroke: node.id === selected ? "#1a73e8" : "#333",
    "stroke-width": node.id === selected ? "4" : "1.5",
  });
  const title = svgEl("title", {});
  title.textContent = `${node.id} — ${node.status}`;
  circle.appendChild(title);
  group.appendChild(circle);

  const label = svgEl("text", {
    x: String(at.x), y: String(at.y + 5),
    "text-anchor": "middle", class: "node-label",
  });
  label.textContent = node.label;
  group.appendChild(label);

  if (caseDoc.pending_cdra.includes(node.id)) {
    const badge = svgEl("text", {
      x: String(at.x), y: String(at.y + 38),
      "text-anchor": "middle", class: "badge",
    });
    badge.textContent = "CDRA pending";
    group.appendChild(badge);
  }
  group.addEventListener("click", () => handlers.onSelect(node.id));
  return group;
}

function patientNeighbors(caseDoc: CaseDoc, subscriber: string): string[] {
  const statuses = new Map(caseDoc.web.nodes.map((n) => [n.id, n.status]));
  const neighbors: string[] = [];
  for (const edge of caseDoc.web.edges) {
    const other = edge.a === subscriber ? edge.b : edge.b === subscriber ? edge.a : null;
    if (other && statuses.get(other) === "Patient") neighbors.push(other);
  }
  return [...new Set(neighbors)].sort();
}

function actionMenu(
  caseDoc: CaseDoc,
  subscriber: string,
  handlers: GraphHandlers,
): HTMLElement {
  const menu = document.createElement("div");
  menu.className = "action-menu";
  const node = caseDoc.web.nodes.find((n) => n.id === subscriber);
  const heading = document.createElement("h3");
  heading.textContent = `${node?.label ?? "?"} ${subscriber} — ${node?.status ?? "?"}`;
  menu.appendChild(heading);

  // an empty case (no call events yet) supports nothing but attaching a CDR
  const emptyCase = caseDoc.web.edges.length === 0;

  for (const patient of emptyCase ? [] : patientNeighbors(caseDoc, subscriber)) {
    const confirm = document.createElement("button");
    confirm.dataset.action = "confirm";
    confirm.dataset.patient = patient;
    confirm.textContent = `confirm contact of ${patient}`;
    confirm.addEventListener("click", () => handlers.onConfirm(patient, subscriber));
    menu.appendChild(confirm);
  }

  for (const result of ["Positive", "Negative"] as const) {
    const test = document.createElement("button");
    test.dataset.action = `test-${result.toLowerCase()}`;
    test.textContent = `record ${result} test`;
    test.disabled = emptyCase;
    test.addEventListener("click", () => handlers.onTest(subscriber, result));
    menu.appendChild(test);
  }

  if (caseDoc.pending_cdra.includes(subscriber) || emptyCase) {
    const csv = document.createElement("textarea");
    csv.dataset.role = "attach-csv";
    csv.placeholder = "paste this subscriber's CDR (CSV)";
    const window = document.createElement("input");
    window.dataset.role = "attach-window";
    window.placeholder = "window START..END";
    const attach = document.createElement("button");
    attach.dataset.action = "attach";
    attach.textContent = "attach CDR";
    attach.addEventListener("click", () =>
      handlers.onAttach(subscriber, csv.value, window.value),
    );
    menu.append(csv, window, attach);
  }
  return menu;
}

export function renderGraphPanel(
  container: HTMLElement,
  caseDoc: CaseDoc,
  handlers: GraphHandlers,
  selected: string | null = null,
): void {
  container.textContent = "";
  const svg = svgEl("svg", {
    viewBox: `0 0 ${SIZE} ${SIZE}`,
    width: String(SIZE),
    height: String(SIZE),
    class: "contact-web",
  });
  const positions = layoutPositions(caseDoc);

  for (const edge of caseDoc.web.edges) {
    const a = positions.get(edge.a);
    const b = positions.get(edge.b);
    if (a && b) svg.appendChild(edgeLine(edge, a, b));
  }
  const byLabel = [...caseDoc.web.nodes].sort((x, y) => (x.label < y.label ? -1 : 1));
  for (const node of byLabel) {
    const at = positions.get(node.id);
    if (at) svg.appendChild(nodeMarker(node, at, caseDoc, selected, handlers));
  }
  container.appendChild(svg);

  if (selected) container.appendChild(actionMenu(caseDoc, selected, handlers));
}
