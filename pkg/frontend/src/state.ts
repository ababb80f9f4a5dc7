// View model: a snapshot of server state plus transient UI bookkeeping.
// Statuses, labels, and tallies all come from the server untouched — the
// client never derives them.

import { Api, CaseDoc, GeoJsonDoc } from "./api.js";

export type PathLayer = {
  subscriber: string;
  geojson: GeoJsonDoc;
  advisoryPublished: boolean;
};

export type ViewModel = {
  caseDoc: CaseDoc | null;
  pathLayers: PathLayer[];
  alertCursor: number;
  pendingActions: string[]; // in-flight mutations, newest last
};

export function emptyModel(): ViewModel {
  return { caseDoc: null, pathLayers: [], alertCursor: 0, pendingActions: [] };
}

// One GET per screen refresh: the case document plus a path layer for every
// subscriber whose CDR the case actually holds.
export async function refreshCase(
  api: Api,
  model: ViewModel,
  caseId: string,
): Promise<ViewModel> {
  const caseDoc = await api.getCase(caseId);
  const published = new Set(
    model.pathLayers.filter((l) => l.advisoryPublished).map((l) => l.subscriber),
  );
  const pathLayers: PathLayer[] = [];
  for (const subscriber of caseDoc.cdra_done) {
    const geojson = await api.getPath(caseId, subscriber);
    pathLayers.push({
      subscriber,
      geojson,
      advisoryPublished: published.has(subscriber),
    });
  }
  return { ...model, caseDoc, pathLayers };
}

export function beginAction(model: ViewModel, label: string): ViewModel {
  return { ...model, pendingActions: [...model.pendingActions, label] };
}

export function endAction(model: ViewModel, label: string): ViewModel {
  const queue = [...model.pendingActions];
  const at = queue.indexOf(label);
  if (at >= 0) queue.splice(at, 1);
  return { ...model, pendingActions: queue };
}
