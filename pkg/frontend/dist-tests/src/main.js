// DOM bootstrap: wires the controller to the screens. This is the only
// module that touches `document`.
import { ApiClient } from "./api.js";
import { CameraSource, FileDropSource } from "./capture.js";
import { drawChart } from "./chart.js";
import { AppController } from "./controller.js";
import { drawObservations } from "./overlay.js";
const FRAME_W = 640;
const FRAME_H = 480;
function el(id) {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing element #${id}`);
    }
    return node;
}
const api = new ApiClient("");
const fileDrop = new FileDropSource();
const controller = new AppController(api, [new CameraSource(), fileDrop]);
const screens = {
    home: el("screen-home"),
    live: el("screen-live"),
    scan: el("screen-scan"),
    axes: el("screen-axes"),
    gallery: el("screen-gallery"),
};
const chartCanvas = el("chart-canvas");
const overlayCanvas = el("overlay-canvas");
const banner = el("banner");
const savedBadge = el("saved-badge");
const pauseButton = el("btn-pause");
const saveButton = el("btn-save");
const captureNote = el("capture-note");
const galleryList = el("gallery-list");
const titleImg = el("title-image");
const labelsRow = el("labels-row");
function show(name) {
    for (const [key, node] of Object.entries(screens)) {
        node.hidden = key !== name;
    }
}
function screenFor(vm) {
    if (vm.flow === "flow1") {
        return "live";
    }
    if (vm.flow === "flow2") {
        if (vm.phase === "scanning") {
            return "scan";
        }
        if (vm.phase === "axis_config") {
            return "axes";
        }
        return "live";
    }
    if (vm.flow === "flow3") {
        return "gallery";
    }
    return "home";
}
function render(vm) {
    show(screenFor(vm));
    banner.hidden = !vm.banner;
    banner.textContent = vm.banner ?? "";
    savedBadge.hidden = !vm.savedFlag;
    saveButton.hidden = vm.flow !== "flow2";
    pauseButton.textContent = vm.chart?.paused ? "Resume" : "Pause";
    captureNote.textContent =
        vm.captureKind === "camera"
            ? "camera live"
            : vm.captureKind
                ? "drop a frame image below"
                : "";
    if (vm.chart) {
        const ctx = chartCanvas.getContext("2d");
        if (ctx) {
            drawChart(ctx, vm.chart, chartCanvas.width, chartCanvas.height);
        }
        if (vm.chart.title_image) {
            titleImg.src = controller.scanImageUrl(vm.chart.title_image);
            titleImg.hidden = false;
        }
        else {
            titleImg.hidden = true;
        }
        labelsRow.replaceChildren(...vm.chart.label_images.map((name) => {
            const img = document.createElement("img");
            img.src = controller.scanImageUrl(name);
            img.className = "label-crop";
            return img;
        }), ...vm.chart.label_texts.map((text) => {
            const span = document.createElement("span");
            span.textContent = text;
            span.className = "label-text";
            return span;
        }));
    }
    const octx = overlayCanvas.getContext("2d");
    if (octx) {
        octx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
        drawObservations(octx, vm.observations, overlayCanvas.width / FRAME_W, overlayCanvas.height / FRAME_H);
    }
    if (vm.flow === "flow3") {
        galleryList.replaceChildren(...vm.snapshots.map((snap) => {
            const tile = document.createElement("figure");
            tile.className = "snap-tile";
            const img = document.createElement("img");
            img.src = controller.snapshotImageUrl(snap.snapshot_id);
            img.alt = `${snap.kind} chart saved ${snap.saved_at}`;
            img.onerror = () => tile.classList.add("broken");
            const caption = document.createElement("figcaption");
            caption.textContent = snap.saved_at;
            tile.append(img, caption);
            return tile;
        }));
        if (!vm.snapshots.length) {
            const empty = document.createElement("p");
            empty.textContent = "No saved charts yet.";
            galleryList.replaceChildren(empty);
        }
    }
}
controller.onChange(render);
function selectedKind() {
    const checked = document.querySelector('input[name="kind"]:checked');
    return checked?.value ?? "bar";
}
el("btn-flow1").onclick = () => void controller.selectFlow("flow1", selectedKind());
el("btn-flow2").onclick = () => void controller.selectFlow("flow2", selectedKind());
el("btn-flow3").onclick = () => void controller.selectFlow("flow3");
for (const id of ["btn-back-live", "btn-back-scan", "btn-back-axes", "btn-back-gallery"]) {
    el(id).onclick = () => void controller.back();
}
pauseButton.onclick = () => void controller.togglePause();
saveButton.onclick = () => void controller.save();
banner.onclick = () => controller.dismissBanner();
chartCanvas.onclick = (ev) => {
    const rect = chartCanvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * chartCanvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * chartCanvas.height;
    void controller.tapAt(x, y, chartCanvas.width, chartCanvas.height);
};
// Flow 2: scan capture via file picker or drop.
const scanInput = el("scan-file");
scanInput.onchange = () => {
    const file = scanInput.files?.[0];
    if (file) {
        void controller.submitScan(file);
    }
};
const axesForm = el("axes-form");
axesForm.onsubmit = (ev) => {
    ev.preventDefault();
    const n = Number(el("axes-n").value);
    const yMax = Number(el("axes-ymax").value);
    void controller.submitAxes(n, yMax);
};
// Live view: dropped images become frames when the camera is unavailable.
const dropZone = el("drop-zone");
dropZone.ondragover = (ev) => ev.preventDefault();
dropZone.ondrop = (ev) => {
    ev.preventDefault();
    const file = ev.dataTransfer?.files?.[0];
    if (file) {
        fileDrop.push(file);
    }
};
const frameInput = el("frame-file");
frameInput.onchange = () => {
    const file = frameInput.files?.[0];
    if (file) {
        fileDrop.push(file);
    }
};
void controller.init().then(() => render(controller.view));
