/**
 * Camera capture helpers. Guarded so environments without getUserMedia
 * (or without a camera) degrade to the file picker.
 */

export function cameraAvailable(nav: Navigator = navigator): boolean {
  return Boolean(nav.mediaDevices && typeof nav.mediaDevices.getUserMedia === 'function');
}

export async function startCamera(video: HTMLVideoElement): Promise<MediaStream> {
  if (!cameraAvailable()) {
    throw new Error('camera not available in this browser');
  }
  const stream = await navigator.mediaDevices.getUserMedia({
    video: { facingMode: 'environment' },
    audio: false,
  });
  video.srcObject = stream;
  await video.play();
  return stream;
}

export function stopCamera(video: HTMLVideoElement): void {
  const stream = video.srcObject as MediaStream | null;
  if (stream) {
    for (const track of stream.getTracks()) track.stop();
  }
  video.srcObject = null;
}

/** Grab the current video frame as a PNG blob. */
export function captureFrame(video: HTMLVideoElement, canvas: HTMLCanvasElement): Promise<Blob> {
  canvas.width = video.videoWidth;
  canvas.height = video.videoHeight;
  const ctx = canvas.getContext('2d');
  if (!ctx) return Promise.reject(new Error('canvas 2d context unavailable'));
  ctx.drawImage(video, 0, 0);
  return new Promise((resolve, reject) => {
    canvas.toBlob((blob) => {
      if (blob) resolve(blob);
      else reject(new Error('could not encode the captured frame'));
    }, 'image/png');
  });
}
