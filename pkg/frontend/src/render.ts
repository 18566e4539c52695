import type {
  MethodReport,
  NeighborInfo,
  RejectionDetail,
  RejectionSummary,
  Report,
} from './types.js';
import { describeAntecedent, differingFeatures, formatPct, formatSigned } from './state.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderQueue(
  items: RejectionSummary[],
  total: number,
  onSelect: (id: string) => void,
): HTMLElement {
  const box = el('div', 'queue');
  box.appendChild(el('h2', undefined, `Flagged rejections (${total})`));
  if (!items.length) {
    box.appendChild(el('p', 'empty', 'Nothing waiting for review.'));
    return box;
  }
  const table = el('table');
  const head = el('tr');
  for (const h of ['id', 'model said', 'confidence', 'slift', 'situation', 'status']) {
    head.appendChild(el('th', undefined, h));
  }
  table.appendChild(head);
  for (const item of items) {
    const row = el('tr', item.decision ? 'decided' : 'pending');
    row.appendChild(el('td', 'mono', item.id));
    row.appendChild(el('td', undefined, String(item.original_prediction)));
    row.appendChild(el('td', undefined, formatPct(item.confidence)));
    row.appendChild(el('td', undefined, formatSigned(item.slift)));
    row.appendChild(el('td', undefined, formatSigned(item.situation_score)));
    row.appendChild(el('td', undefined, item.decision ? item.decision.action : 'pending'));
    row.addEventListener('click', () => onSelect(item.id));
    table.appendChild(row);
  }
  box.appendChild(table);
  return box;
}

function ruleCard(detail: RejectionDetail): HTMLElement {
  const card = el('div', 'card rule-card');
  card.appendChild(el('h3', undefined, 'Matched rule'));
  const rule = detail.outcome.verdict?.rule;
  if (!rule) {
    card.appendChild(el('p', 'empty', 'No rule payload recorded.'));
    return card;
  }
  card.appendChild(el('p', 'mono', `${describeAntecedent(rule.antecedent)} → ${rule.consequent}`));
  const dl = el('dl');
  const rows: [string, string][] = [
    ['kind', rule.kind],
    ['support', formatPct(rule.support, 2)],
    ['confidence in group', formatPct(rule.confidence)],
    ['confidence outside group', formatPct(rule.negated_confidence)],
    ['slift', formatSigned(rule.slift)],
    ['p-value', rule.p_value.toExponential(2)],
    ['group size', `${rule.n_group} vs ${rule.n_negated}`],
  ];
  for (const [k, v] of rows) {
    dl.appendChild(el('dt', undefined, k));
    dl.appendChild(el('dd', undefined, v));
  }
  card.appendChild(dl);
  return card;
}

function neighborTable(
  title: string,
  neighbors: NeighborInfo[],
  target: Record<string, string>,
): HTMLElement {
  const box = el('div', 'card neighbors');
  box.appendChild(el('h4', undefined, title));
  const table = el('table');
  const cols = neighbors.length ? Object.keys(neighbors[0].features).sort() : [];
  const head = el('tr');
  for (const h of ['id', ...cols, 'label', 'distance']) {
    head.appendChild(el('th', undefined, h));
  }
  table.appendChild(head);
  for (const n of neighbors) {
    const diff = new Set(differingFeatures(target, n));
    const row = el('tr');
    row.appendChild(el('td', 'mono', n.id));
    for (const c of cols) {
      row.appendChild(el('td', diff.has(c) ? 'diff' : undefined, n.features[c]));
    }
    row.appendChild(el('td', undefined, String(n.label)));
    row.appendChild(el('td', undefined, n.distance.toFixed(3)));
    table.appendChild(row);
  }
  box.appendChild(table);
  return box;
}

export function renderDetail(
  detail: RejectionDetail,
  onSubmit: (action: string, overrideLabel: string, reviewerId: string, rationale: string) => void,
): HTMLElement {
  const box = el('div', 'detail');
  box.appendChild(el('h2', undefined, `Case ${detail.outcome.id}`));

  if (detail.instance) {
    const facts = el('p', 'mono');
    facts.textContent = Object.entries(detail.instance.values)
      .map(([k, v]) => `${k}=${v}`)
      .join('  ');
    box.appendChild(facts);
  }
  box.appendChild(
    el(
      'p',
      undefined,
      `Model predicted ${detail.outcome.original_prediction} with confidence ` +
        `${formatPct(detail.outcome.confidence)}; prediction withheld as potentially unfair.`,
    ),
  );

  box.appendChild(ruleCard(detail));

  const situation = detail.outcome.verdict?.situation;
  if (situation && detail.instance) {
    const st = el('div', 'card');
    st.appendChild(el('h3', undefined, 'Similar training cases'));
    st.appendChild(
      el(
        'p',
        undefined,
        `Positive rate among reference-group neighbors ${formatPct(situation.dec_r)} vs ` +
          `${formatPct(situation.dec_nr)} elsewhere (gap ${formatSigned(situation.score)}).`,
      ),
    );
    st.appendChild(neighborTable('Reference group', situation.neighbors_ref, detail.instance.values));
    st.appendChild(neighborTable('Non-reference group', situation.neighbors_nonref, detail.instance.values));
    box.appendChild(st);
  }

  if (detail.decisions.length) {
    const hist = el('div', 'card');
    hist.appendChild(el('h3', undefined, 'Decision history'));
    for (const d of detail.decisions) {
      hist.appendChild(
        el(
          'p',
          'mono',
          `${new Date(d.timestamp * 1000).toISOString()} ${d.reviewer_id}: ${d.action}` +
            (d.override_label !== null ? ` → ${d.override_label}` : '') +
            (d.rationale ? ` (${d.rationale})` : ''),
        ),
      );
    }
    box.appendChild(hist);
  }

  box.appendChild(decisionForm(onSubmit));
  return box;
}

function decisionForm(
  onSubmit: (action: string, overrideLabel: string, reviewerId: string, rationale: string) => void,
): HTMLElement {
  const form = el('form', 'card decision-form');
  form.appendChild(el('h3', undefined, 'Your decision'));

  const reviewer = el('input');
  reviewer.placeholder = 'reviewer id';
  reviewer.name = 'reviewer';
  form.appendChild(reviewer);

  const action = el('select');
  action.name = 'action';
  for (const [value, label] of [
    ['keep_original', 'Keep the model prediction'],
    ['override_label', 'Override with a label'],
    ['uphold_abstain', 'Uphold the abstention'],
  ]) {
    const opt = el('option', undefined, label);
    opt.value = value;
    action.appendChild(opt);
  }
  form.appendChild(action);

  const override = el('select');
  override.name = 'override';
  for (const v of ['0', '1']) {
    const opt = el('option', undefined, v);
    opt.value = v;
    override.appendChild(opt);
  }
  override.disabled = true;
  action.addEventListener('change', () => {
    override.disabled = action.value !== 'override_label';
  });
  form.appendChild(override);

  const rationale = el('input');
  rationale.placeholder = 'rationale (optional)';
  rationale.name = 'rationale';
  form.appendChild(rationale);

  const submit = el('button', undefined, 'Submit');
  submit.type = 'submit';
  form.appendChild(submit);

  form.addEventListener('submit', (ev) => {
    ev.preventDefault();
    onSubmit(action.value, override.value, reviewer.value, rationale.value);
  });
  return form;
}

export function renderReport(report: Report): HTMLElement {
  const box = el('div', 'report');
  box.appendChild(el('h2', undefined, 'Live metrics (with your amendments)'));
  const table = el('table');
  const head = el('tr');
  for (const h of ['method', 'accuracy', 'coverage', 'PDR range', 'PDR std']) {
    head.appendChild(el('th', undefined, h));
  }
  table.appendChild(head);
  for (const method of ['FC', 'UBAC', 'IFAC']) {
    const rep: MethodReport | undefined = report[method];
    if (!rep) continue;
    const row = el('tr');
    row.appendChild(el('td', undefined, method));
    row.appendChild(el('td', undefined, formatPct(rep.performance['accuracy']?.mean)));
    row.appendChild(el('td', undefined, formatPct(rep.coverage?.mean)));
    row.appendChild(el('td', undefined, formatSigned(rep.disparity['pdr']?.range)));
    row.appendChild(el('td', undefined, formatSigned(rep.disparity['pdr']?.std)));
    table.appendChild(row);
  }
  box.appendChild(table);
  return box;
}

export function renderError(message: string): HTMLElement {
  return el('p', 'error', message);
}
