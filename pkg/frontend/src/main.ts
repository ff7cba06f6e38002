/** Page bootstrap: wires the DOM controls to the retake app. */

import { createApp } from './app.js';
import { createClient } from './api.js';
import { ensureRegion } from './announcer.js';
import { cameraAvailable, captureFrame, startCamera, stopCamera } from './camera.js';

function serviceBaseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get('service') ?? window.location.origin;
}

export function bootstrap(doc: Document): void {
  ensureRegion(doc);
  const attempts = doc.getElementById('attempts') as HTMLElement;
  const banner = doc.getElementById('banner') as HTMLElement;
  const fileInput = doc.getElementById('file-input') as HTMLInputElement;
  const cameraButton = doc.getElementById('camera-button') as HTMLButtonElement;
  const captureButton = doc.getElementById('capture-button') as HTMLButtonElement;
  const video = doc.getElementById('camera-preview') as HTMLVideoElement;
  const canvas = doc.getElementById('capture-canvas') as HTMLCanvasElement;

  const app = createApp({
    doc,
    client: createClient(serviceBaseUrl()),
    elements: { attempts, banner, captureControl: fileInput },
    thumbnailFor: (image) =>
      image instanceof Blob && typeof URL.createObjectURL === 'function'
        ? URL.createObjectURL(image)
        : undefined,
  });

  fileInput.addEventListener('change', () => {
    const file = fileInput.files?.[0];
    if (file) {
      void app.submit(file, file.type || 'application/octet-stream');
      fileInput.value = '';
    }
  });

  if (cameraAvailable()) {
    cameraButton.hidden = false;
    let running = false;
    cameraButton.addEventListener('click', async () => {
      if (!running) {
        await startCamera(video);
        running = true;
        video.hidden = false;
        captureButton.hidden = false;
        cameraButton.textContent = 'Stop camera';
      } else {
        stopCamera(video);
        running = false;
        video.hidden = true;
        captureButton.hidden = true;
        cameraButton.textContent = 'Use camera';
      }
    });
    captureButton.addEventListener('click', async () => {
      const blob = await captureFrame(video, canvas);
      void app.submit(blob, 'image/png');
    });
  }
}

if (typeof window !== 'undefined' && typeof document !== 'undefined') {
  if (document.readyState === 'loading') {
    document.addEventListener('DOMContentLoaded', () => bootstrap(document));
  } else {
    bootstrap(document);
  }
}
