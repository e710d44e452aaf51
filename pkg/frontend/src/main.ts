// Browser wiring: controls on the left, pianoroll and transport on the right.

import { ServiceClient } from "./api.js";
import { debounce } from "./debounce.js";
import { locateCell, renderPianoroll } from "./pianoroll.js";
import { cellDurationSec, scheduleNotes, totalDurationSec } from "./schedule.js";
import { EditorStore } from "./state.js";
import { Player, SynthContext } from "./synth.js";
import { SILENCE } from "./tokens.js";

const SERVICE_URL = new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8040";
const DEBOUNCE_MS = 150;
const BPM = 120;
const EXTRA_SLIDER_DIMS = [2, 3, 4, 5];

const client = new ServiceClient(SERVICE_URL);
const store = new EditorStore(client);

const canvas = document.getElementById("pianoroll") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const selectA = document.getElementById("exemplar-a") as HTMLSelectElement;
const selectB = document.getElementById("exemplar-b") as HTMLSelectElement;
const alphaSlider = document.getElementById("alpha") as HTMLInputElement;
const alphaValue = document.getElementById("alpha-value")!;
const genreSelect = document.getElementById("genre") as HTMLSelectElement;
const sampleButton = document.getElementById("sample") as HTMLButtonElement;
const playButton = document.getElementById("play") as HTMLButtonElement;
const stopButton = document.getElementById("stop") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const padCanvas = document.getElementById("latent-pad") as HTMLCanvasElement;
const padCtx = padCanvas.getContext("2d")!;
const slidersDiv = document.getElementById("latent-sliders")!;
const banner = document.getElementById("banner")!;

let player: Player | null = null;
let audioCtx: AudioContext | null = null;

function ensurePlayer(): Player {
  if (!player) {
    audioCtx = new AudioContext();
    player = new Player(audioCtx as unknown as SynthContext);
  }
  if (audioCtx && audioCtx.state === "suspended") {
    void audioCtx.resume(); // requires a user gesture; buttons provide one
  }
  return player;
}

function drawPad(z: number[] | null): void {
  const w = padCanvas.width;
  const h = padCanvas.height;
  padCtx.clearRect(0, 0, w, h);
  padCtx.strokeStyle = "#4c566a";
  padCtx.strokeRect(0.5, 0.5, w - 1, h - 1);
  padCtx.beginPath();
  padCtx.arc(w / 2, h / 2, Math.min(w, h) / 2 - 6, 0, Math.PI * 2);
  padCtx.stroke();
  if (z) {
    const x = ((z[0] + 1.6) / 3.2) * w;
    const y = ((1.6 - z[1]) / 3.2) * h;
    padCtx.fillStyle = "#ebcb8b";
    padCtx.beginPath();
    padCtx.arc(x, y, 5, 0, Math.PI * 2);
    padCtx.fill();
  }
}

function rebuildSliders(z: number[] | null): void {
  slidersDiv.replaceChildren();
  for (const dim of EXTRA_SLIDER_DIMS) {
    const label = document.createElement("label");
    label.textContent = `z[${dim}]`;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "-3";
    input.max = "3";
    input.step = "0.05";
    input.value = String(z?.[dim] ?? 0);
    input.addEventListener(
      "input",
      () => debouncedLatent({ [dim]: parseFloat(input.value) }),
    );
    label.appendChild(input);
    slidersDiv.appendChild(label);
  }
}

const debouncedAlpha = debounce((alpha: number) => void store.setAlpha(alpha), DEBOUNCE_MS);
const debouncedLatent = debounce(
  (dims: Record<number, number>) => void store.setLatent(dims),
  DEBOUNCE_MS,
);

store.subscribe((state) => {
  banner.textContent = state.error ?? "";
  banner.classList.toggle("visible", state.error !== null);
  banner.classList.toggle("stale", state.stale);
  alphaValue.textContent = state.alpha.toFixed(2);

  if (selectA.options.length === 0 && state.exemplars.length > 0) {
    for (const [sel, tag] of [
      [selectA, "A"],
      [selectB, "B"],
    ] as const) {
      for (let i = 0; i < state.exemplars.length; i++) {
        const option = document.createElement("option");
        option.value = String(i);
        option.textContent = `${tag}: ${state.exemplars[i].id} (${state.exemplars[i].song_id})`;
        sel.appendChild(option);
      }
    }
  }
  if (genreSelect.options.length === 0 && state.genres && state.genres.tags.length > 0) {
    const any = document.createElement("option");
    any.value = "";
    any.textContent = "(any genre)";
    genreSelect.appendChild(any);
    state.genres.tags.forEach((tag, i) => {
      const option = document.createElement("option");
      option.value = String(i);
      option.textContent = tag;
      genreSelect.appendChild(option);
    });
  }

  if (state.decoded) {
    renderPianoroll(ctx, state.decoded, {
      width: canvas.width,
      height: canvas.height,
      cursorCell: state.positionCell,
    });
  }
  drawPad(state.z);
});

selectA.addEventListener("change", () => void store.selectExemplar("A", Number(selectA.value)));
selectB.addEventListener("change", () => void store.selectExemplar("B", Number(selectB.value)));
alphaSlider.addEventListener("input", () => debouncedAlpha(parseFloat(alphaSlider.value)));
sampleButton.addEventListener("click", () => {
  const value = genreSelect.value;
  void store.sampleFromGenre(value === "" ? null : Number(value));
});

canvas.addEventListener("click", (event) => {
  const state = store.current;
  if (!state.decoded) return;
  const rect = canvas.getBoundingClientRect();
  const { cell, track, pitch } = locateCell(
    ((event.clientX - rect.left) / rect.width) * canvas.width,
    ((event.clientY - rect.top) / rect.height) * canvas.height,
    state.decoded,
    { width: canvas.width, height: canvas.height },
  );
  const existing = state.decoded[cell][track];
  void store.editCell(cell, track, existing === pitch ? SILENCE : pitch);
});

padCanvas.addEventListener("click", (event) => {
  const rect = padCanvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) / rect.width) * 3.2 - 1.6;
  const y = 1.6 - ((event.clientY - rect.top) / rect.height) * 3.2;
  debouncedLatent({ 0: x, 1: y });
});

playButton.addEventListener("click", () => {
  const state = store.current;
  if (!state.decoded) return;
  const notes = scheduleNotes(state.decoded, BPM);
  const duration = totalDurationSec(state.decoded.length, BPM);
  const cell = cellDurationSec(BPM);
  ensurePlayer().play(
    notes,
    duration,
    (pos) => store.setPlayback(true, Math.min(state.decoded!.length - 1, Math.floor(pos / cell))),
    () => store.setPlayback(false, null),
  );
  store.setPlayback(true, 0);
});

stopButton.addEventListener("click", () => {
  player?.stop();
  store.setPlayback(false, null);
});

exportButton.addEventListener("click", () => {
  const state = store.current;
  if (!state.decoded) return;
  void client.exportMidi(state.decoded, BPM).then((buffer) => {
    const blob = new Blob([buffer], { type: "audio/midi" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "segment.mid";
    link.click();
    URL.revokeObjectURL(link.href);
  });
});

rebuildSliders(null);
void store.init().then(() => {
  if (store.current.exemplars.length > 1) {
    void store.selectExemplar("A", 0).then(() => store.selectExemplar("B", 1));
  }
});
