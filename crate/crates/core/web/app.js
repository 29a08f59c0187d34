// Minimal client: speech in via the browser recognizer (when present),
// speech out via speechSynthesis on the plain-text field.

const lang = navigator.language && navigator.language.startsWith("de") ? "de" : "en";
const log = document.getElementById("log");
const list = document.getElementById("suggestions");
let sessionId = null;

function show(text, cls) {
  const p = document.createElement("p");
  p.className = cls;
  p.textContent = text;
  log.prepend(p);
}

function speak(text) {
  if (!window.speechSynthesis) return;
  speechSynthesis.cancel();
  const u = new SpeechSynthesisUtterance(text);
  u.lang = lang === "de" ? "de-DE" : "en-US";
  speechSynthesis.speak(u);
}

function present(response) {
  show(response.text, "agent");
  list.replaceChildren(...response.suggestions.map((s) => {
    const li = document.createElement("li");
    const b = document.createElement("button");
    b.type = "button";
    b.textContent = s.title;
    b.addEventListener("click", () => say(lang === "de" ? `Nummer ${s.number}` : `number ${s.number}`));
    li.append(b);
    return li;
  }));
  for (const d of response.directives) {
    if (d === "pause") speechSynthesis.pause();
    if (d === "play") speechSynthesis.resume();
  }
  if (response.text) speak(response.text);
}

async function post(path, body) {
  const r = await fetch(path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  const data = await r.json();
  if (!r.ok) throw new Error(data.message || r.statusText);
  return data;
}

async function start() {
  const data = await post("/sessions", { language: lang });
  sessionId = data.session_id;
  present(data.response);
}

async function say(text) {
  if (!text.trim()) return;
  show(text, "user");
  try {
    present(await post(`/sessions/${sessionId}/utterance`, { text }));
  } catch (e) {
    show(e.message, "error");
  }
}

document.getElementById("typed").addEventListener("submit", (e) => {
  e.preventDefault();
  const input = document.getElementById("text");
  say(input.value);
  input.value = "";
});

const Recognition = window.SpeechRecognition || window.webkitSpeechRecognition;
const mic = document.getElementById("mic");
if (Recognition) {
  const rec = new Recognition();
  rec.lang = lang === "de" ? "de-DE" : "en-US";
  rec.onresult = (e) => say(e.results[0][0].transcript);
  rec.onend = () => mic.classList.remove("listening");
  mic.addEventListener("click", () => {
    mic.classList.add("listening");
    rec.start();
  });
} else {
  mic.disabled = true;
  mic.title = "Speech input is not available in this browser";
}

start().catch((e) => show(e.message, "error"));
