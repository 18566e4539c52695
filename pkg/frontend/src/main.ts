import { getRejection, getReport, listRejections, postDecision } from './api.js';
import { renderDetail, renderError, renderQueue, renderReport } from './render.js';
import { validateDecision } from './state.js';
import type { DecisionAction } from './types.js';

const queuePane = document.getElementById('queue-pane')!;
const detailPane = document.getElementById('detail-pane')!;
const reportPane = document.getElementById('report-pane')!;

async function refreshQueue(): Promise<void> {
  try {
    const page = await listRejections(1, 100);
    queuePane.replaceChildren(renderQueue(page.items, page.total, openDetail));
  } catch (err) {
    queuePane.replaceChildren(renderError(`failed to load queue: ${err}`));
  }
}

async function refreshReport(): Promise<void> {
  try {
    reportPane.replaceChildren(renderReport(await getReport()));
  } catch (err) {
    reportPane.replaceChildren(renderError(`failed to load report: ${err}`));
  }
}

async function openDetail(id: string): Promise<void> {
  try {
    const detail = await getRejection(id);
    detailPane.replaceChildren(
      renderDetail(detail, (action, overrideLabel, reviewerId, rationale) =>
        submit(id, action, overrideLabel, reviewerId, rationale),
      ),
    );
  } catch (err) {
    detailPane.replaceChildren(renderError(`failed to load case: ${err}`));
  }
}

async function submit(
  id: string,
  action: string,
  overrideLabel: string,
  reviewerId: string,
  rationale: string,
): Promise<void> {
  const problem = validateDecision({ reviewerId, action, overrideLabel });
  if (problem) {
    detailPane.prepend(renderError(problem));
    return;
  }
  try {
    await postDecision(id, {
      reviewer_id: reviewerId,
      action: action as DecisionAction,
      override_label: action === 'override_label' ? Number(overrideLabel) : null,
      rationale,
    });
    await Promise.all([refreshQueue(), refreshReport(), openDetail(id)]);
  } catch (err) {
    detailPane.prepend(renderError(`failed to save decision: ${err}`));
  }
}

void refreshQueue();
void refreshReport();
