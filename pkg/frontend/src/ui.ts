// DOM application: login/signup view and the chat view with verdict badges,
// expandable sources, history paging, and error/retry affordances.
//
// Rendering uses textContent throughout, so answer strings reach the page
// byte-for-byte as the API returned them (and markup in responses is inert).

import { ApiClient, ApiError } from "./api.js";
import {
  ChatViewState,
  Turn,
  badgeLabel,
  formatConfidence,
  newChatState,
  sessionIdFor,
  turnFromAsk,
  turnsFromHistory,
} from "./state.js";

const TOKEN_KEY = "courseqa.token";
const SESSION_KEY = "courseqa.session";
const DRAFT_KEY = "courseqa.draft";

const HISTORY_PAGE = 50;

export class App {
  private state: ChatViewState;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly storage: Storage,
  ) {
    const session = this.storage.getItem(SESSION_KEY) ?? sessionIdFor();
    this.storage.setItem(SESSION_KEY, session);
    this.state = newChatState(session);
    this.state.draft = this.storage.getItem(DRAFT_KEY) ?? "";
  }

  async start(): Promise<void> {
    const token = this.storage.getItem(TOKEN_KEY);
    if (token) {
      this.client.token = token;
      try {
        await this.enterChat();
        return;
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 401)) throw err;
        this.storage.removeItem(TOKEN_KEY);
      }
    }
    this.renderLogin();
  }

  // -- login view ----------------------------------------------------------

  private renderLogin(message = ""): void {
    this.root.innerHTML = "";
    const form = el("form", "login-form");
    const title = el("h1");
    title.textContent = "courseqa";
    const login = input("text", "login", "login");
    const password = input("password", "password", "password");
    const error = el("p", "login-error");
    error.textContent = message;
    const signupBtn = button("Sign up", "signup");
    const loginBtn = button("Log in", "login");
    loginBtn.type = "submit";

    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.authenticate(login.value, password.value, false, error);
    });
    signupBtn.addEventListener("click", () => {
      void this.authenticate(login.value, password.value, true, error);
    });

    form.append(title, login, password, loginBtn, signupBtn, error);
    this.root.append(form);
  }

  private async authenticate(
    login: string,
    password: string,
    signup: boolean,
    errorLine: HTMLElement,
  ): Promise<void> {
    try {
      if (signup) await this.client.signup(login, password);
      const token = await this.client.login(login, password);
      this.storage.setItem(TOKEN_KEY, token);
      await this.enterChat();
    } catch (err) {
      errorLine.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  // -- chat view -----------------------------------------------------------

  private async enterChat(): Promise<void> {
    const health = await this.client.health();
    this.state = newChatState(this.state.sessionId);
    this.state.validationThreshold = health.validation_threshold;
    this.state.draft = this.storage.getItem(DRAFT_KEY) ?? "";
    const page = await this.client.history(HISTORY_PAGE, 0);
    this.state.turns = turnsFromHistory(page.records);
    this.state.historyOffset = page.records.length;
    this.state.historyExhausted = page.records.length < HISTORY_PAGE;
    this.renderChat();
  }

  private renderChat(): void {
    this.root.innerHTML = "";
    const wrap = el("div", "chat");

    const banner = el("div", "error-banner");
    banner.hidden = true;

    const earlier = button("Load earlier turns", "load-earlier");
    earlier.hidden = this.state.historyExhausted;
    earlier.addEventListener("click", () => void this.loadEarlier());

    const list = el("ol", "turns");
    for (const turn of this.state.turns) {
      list.append(renderTurn(turn, this.state.validationThreshold));
    }

    const form = el("form", "composer");
    const box = document.createElement("textarea");
    box.className = "question";
    box.value = this.state.draft;
    box.addEventListener("input", () => {
      this.state.draft = box.value;
      this.storage.setItem(DRAFT_KEY, box.value);
    });
    const send = button("Send", "send");
    send.type = "submit";
    send.disabled = this.state.inFlight;
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.send(box.value);
    });
    form.append(box, send);

    wrap.append(banner, earlier, list, form);
    this.root.append(wrap);
  }

  private async loadEarlier(): Promise<void> {
    const page = await this.client.history(HISTORY_PAGE, this.state.historyOffset);
    this.state.turns = [...turnsFromHistory(page.records), ...this.state.turns];
    this.state.historyOffset += page.records.length;
    this.state.historyExhausted = page.records.length < HISTORY_PAGE;
    this.renderChat();
  }

  private async send(question: string): Promise<void> {
    if (this.state.inFlight || !question.trim()) return;
    this.state.inFlight = true;
    this.state.error = null;
    this.state.retryQuestion = null;
    this.renderChat();
    try {
      const result = await this.client.ask(question, this.state.sessionId);
      this.state.turns = [...this.state.turns, turnFromAsk(question, result)];
      this.state.historyOffset += 1;
      this.state.draft = "";
      this.storage.removeItem(DRAFT_KEY);
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        // token expired mid-session: keep the draft, go back to login
        this.storage.setItem(DRAFT_KEY, question);
        this.storage.removeItem(TOKEN_KEY);
        this.client.token = null;
        this.state.inFlight = false;
        this.renderLogin("Session expired, please log in again.");
        return;
      }
      if (err instanceof ApiError && err.status === 503) {
        this.state.error = `Service busy: ${err.message}`;
        this.state.retryQuestion = question;
      } else {
        this.state.error = err instanceof Error ? err.message : String(err);
      }
    } finally {
      if (this.state.inFlight) {
        this.state.inFlight = false;
        this.renderChat();
        this.showBanner();
      }
    }
  }

  private showBanner(): void {
    const banner = this.root.querySelector<HTMLElement>(".error-banner");
    if (!banner || !this.state.error) return;
    banner.hidden = false;
    banner.textContent = this.state.error;
    if (this.state.retryQuestion !== null) {
      const retry = button("Retry", "retry");
      const question = this.state.retryQuestion;
      retry.addEventListener("click", () => void this.send(question));
      banner.append(" ", retry);
    }
  }
}

function renderTurn(turn: Turn, threshold: number | null): HTMLElement {
  const item = el("li", turn.accepted ? "turn accepted" : "turn rejected");

  const question = el("div", "question-line");
  question.textContent = turn.question;
  item.append(question);

  if (turn.rewrittenQuestion !== turn.question) {
    const rewritten = el("div", "rewritten-line");
    rewritten.textContent = `interpreted as: ${turn.rewrittenQuestion}`;
    item.append(rewritten);
  }

  const badge = el("span", turn.accepted ? "badge badge-green" : "badge badge-red");
  badge.textContent = badgeLabel(turn.verdict);
  // threshold comes from GET /health, never hard-coded client-side
  badge.title =
    `${turn.verdict.result}, confidence ${formatConfidence(turn.verdict.confidence)}` +
    (threshold !== null ? ` (acceptance threshold ${formatConfidence(threshold)})` : "");
  item.append(badge);

  const body = el("div", "answer-line");
  body.textContent = turn.text;
  item.append(body);

  if (!turn.accepted && turn.verdict.reasoning) {
    const reasoning = el("div", "reasoning-line");
    reasoning.textContent = turn.verdict.reasoning;
    item.append(reasoning);
  }

  if (turn.sources.length) {
    const details = document.createElement("details");
    details.className = "sources";
    const summary = document.createElement("summary");
    summary.textContent = `sources (${turn.sources.length})`;
    details.append(summary);
    const ul = el("ul");
    for (const source of turn.sources) {
      const li = el("li");
      li.textContent = `${source.chunk_id} (${source.score.toFixed(4)})`;
      ul.append(li);
    }
    details.append(ul);
    item.append(details);
  }
  return item;
}

function el(tag: string, className = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function input(type: string, name: string, placeholder: string): HTMLInputElement {
  const node = document.createElement("input");
  node.type = type;
  node.name = name;
  node.placeholder = placeholder;
  return node;
}

function button(label: string, className: string): HTMLButtonElement {
  const node = document.createElement("button");
  node.type = "button";
  node.className = className;
  node.textContent = label;
  return node;
}

export function initApp(root: HTMLElement, baseUrl = "", storage: Storage = window.localStorage): App {
  return new App(root, new ApiClient(baseUrl), storage);
}
