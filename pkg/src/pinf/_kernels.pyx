# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Operation-for-operation twin of `pinf._kernels_py`; compiled with
-ffp-contract=off so results are bit-identical to the pure backend. Keep the
two files in lockstep when editing.
"""

from libc.math cimport atan2, cos, floor, sin, sqrt

cdef double TWO_PI = 6.283185307179586
cdef double RAD2DEG = 57.29577951308232


def luminance(double[::1] pix, int w, int h, double[::1] out):
    cdef int i, b, n = w * h
    cdef double bl
    for i in range(n):
        b = 3 * i
        bl = pix[b + 2]
        out[i] = bl + 0.299 * (pix[b] - bl) + 0.587 * (pix[b + 1] - bl)


def lum_stats(double[::1] gray, int n):
    cdef double s = 0.0, v, mean, ss = 0.0, d
    cdef int i, lo = 0, hi = 0
    for i in range(n):
        v = gray[i]
        s += v
        if v < 0.05:
            lo += 1
        if v > 0.95:
            hi += 1
    mean = s / n
    for i in range(n):
        d = gray[i] - mean
        ss += d * d
    return mean, sqrt(ss / n), (<double>lo) / n, (<double>hi) / n


def laplacian_variance(double[::1] gray, int w, int h):
    cdef int m = (w - 2) * (h - 2)
    cdef double s = 0.0, mean, ss = 0.0, r, d
    cdef int x, y, i, row
    for y in range(1, h - 1):
        row = y * w
        for x in range(1, w - 1):
            i = row + x
            r = (((gray[i - w] + gray[i + w]) + gray[i - 1]) + gray[i + 1]) - 4.0 * gray[i]
            s += r
    mean = s / m
    for y in range(1, h - 1):
        row = y * w
        for x in range(1, w - 1):
            i = row + x
            r = (((gray[i - w] + gray[i + w]) + gray[i - 1]) + gray[i + 1]) - 4.0 * gray[i]
            d = r - mean
            ss += d * d
    return ss / m


def sobel_stats(double[::1] gray, int w, int h, int bh, int bw, double[::1] out):
    cdef int k, x, y, i, row, bin_, nb = 0, nc = 0, m
    cdef double gx, gy, mag, th, deg
    cdef double s = 0.0, bsum = 0.0, csum = 0.0, cc = 0.0, ss = 0.0
    for k in range(13):
        out[k] = 0.0
    for y in range(1, h - 1):
        row = y * w
        for x in range(1, w - 1):
            i = row + x
            gx = ((gray[i - w + 1] + 2.0 * gray[i + 1]) + gray[i + w + 1]) - (
                (gray[i - w - 1] + 2.0 * gray[i - 1]) + gray[i + w - 1]
            )
            gy = ((gray[i + w - 1] + 2.0 * gray[i + w]) + gray[i + w + 1]) - (
                (gray[i - w - 1] + 2.0 * gray[i - w]) + gray[i - w + 1]
            )
            mag = sqrt(gx * gx + gy * gy)
            s += mag
            if y < bh or y >= h - bh or x < bw or x >= w - bw:
                bsum += mag
                nb += 1
            else:
                csum += mag
                nc += 1
            if mag > 0.0:
                th = atan2(gy, gx)
                cc += mag * cos(4.0 * th)
                ss += mag * sin(4.0 * th)
                deg = th * RAD2DEG
                if deg < 0.0:
                    deg += 180.0
                if deg >= 180.0:
                    deg -= 180.0
                bin_ = <int>(deg / 22.5)
                if bin_ > 7:
                    bin_ = 7
                out[5 + bin_] += mag
    m = (w - 2) * (h - 2)
    out[0] = s / m
    out[1] = bsum / nb if nb > 0 else 0.0
    out[2] = csum / nc if nc > 0 else 0.0
    out[3] = cc
    out[4] = ss


def border_lum_diff(double[::1] gray, int w, int h, int bh, int bw):
    cdef double bsum = 0.0, csum = 0.0, v, bm, cm
    cdef int x, y, row, nb = 0, nc = 0
    for y in range(h):
        row = y * w
        for x in range(w):
            v = gray[row + x]
            if y < bh or y >= h - bh or x < bw or x >= w - bw:
                bsum += v
                nb += 1
            else:
                csum += v
                nc += 1
    bm = bsum / nb if nb > 0 else 0.0
    cm = csum / nc if nc > 0 else 0.0
    return bm - cm


def block_stats(double[::1] gray, int w, int h, int grid,
                double[::1] means, double[::1] variances):
    cdef int by, bx, y0, y1, x0, x1, cnt, x, y, row
    cdef double s, mean, ss, d
    for by in range(grid):
        y0 = (by * h) // grid
        y1 = ((by + 1) * h) // grid
        for bx in range(grid):
            x0 = (bx * w) // grid
            x1 = ((bx + 1) * w) // grid
            cnt = (y1 - y0) * (x1 - x0)
            s = 0.0
            for y in range(y0, y1):
                row = y * w
                for x in range(x0, x1):
                    s += gray[row + x]
            mean = s / cnt
            ss = 0.0
            for y in range(y0, y1):
                row = y * w
                for x in range(x0, x1):
                    d = gray[row + x] - mean
                    ss += d * d
            means[by * grid + bx] = mean
            variances[by * grid + bx] = ss / cnt


def saturation_mean(double[::1] pix, int w, int h):
    cdef int i, b, n = w * h
    cdef double s = 0.0, r, g, bl, mx, mn
    for i in range(n):
        b = 3 * i
        r = pix[b]
        g = pix[b + 1]
        bl = pix[b + 2]
        mx = r
        if g > mx:
            mx = g
        if bl > mx:
            mx = bl
        mn = r
        if g < mn:
            mn = g
        if bl < mn:
            mn = bl
        s += mx - mn
    return s / n


def shift_extend(double[::1] pix, int w, int h, int dx, int dy, double[::1] out):
    cdef int x, y, sx, sy, src, dst
    for y in range(h):
        sy = y - dy
        if sy < 0:
            sy = 0
        elif sy > h - 1:
            sy = h - 1
        for x in range(w):
            sx = x - dx
            if sx < 0:
                sx = 0
            elif sx > w - 1:
                sx = w - 1
            src = (sy * w + sx) * 3
            dst = (y * w + x) * 3
            out[dst] = pix[src]
            out[dst + 1] = pix[src + 1]
            out[dst + 2] = pix[src + 2]


def rotate_bilinear(double[::1] pix, int w, int h, double ca, double sa, double[::1] out):
    cdef double cx = (w - 1) * 0.5
    cdef double cy = (h - 1) * 0.5
    cdef double fx, fy, sx, sy, tx, ty, top, bot
    cdef int x, y, x0, y0, x1, y1, p00, p01, p10, p11, dst, c
    for y in range(h):
        fy = y - cy
        for x in range(w):
            fx = x - cx
            sx = cx + ca * fx + sa * fy
            sy = cy - sa * fx + ca * fy
            if sx < 0.0:
                sx = 0.0
            elif sx > w - 1.0:
                sx = w - 1.0
            if sy < 0.0:
                sy = 0.0
            elif sy > h - 1.0:
                sy = h - 1.0
            x0 = <int>floor(sx)
            y0 = <int>floor(sy)
            tx = sx - x0
            ty = sy - y0
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            p00 = (y0 * w + x0) * 3
            p01 = (y0 * w + x1) * 3
            p10 = (y1 * w + x0) * 3
            p11 = (y1 * w + x1) * 3
            dst = (y * w + x) * 3
            for c in range(3):
                top = (1.0 - tx) * pix[p00 + c] + tx * pix[p01 + c]
                bot = (1.0 - tx) * pix[p10 + c] + tx * pix[p11 + c]
                out[dst + c] = (1.0 - ty) * top + ty * bot


def blur_h(double[::1] pix, int w, int h, double[::1] wts, int r, double[::1] out):
    cdef int x, y, c, k, xx, row, dst
    cdef double acc
    for y in range(h):
        row = y * w
        for x in range(w):
            dst = (row + x) * 3
            for c in range(3):
                acc = 0.0
                for k in range(-r, r + 1):
                    xx = x + k
                    if xx < 0:
                        xx = 0
                    elif xx > w - 1:
                        xx = w - 1
                    acc += wts[k + r] * pix[(row + xx) * 3 + c]
                out[dst + c] = acc


def blur_v(double[::1] pix, int w, int h, double[::1] wts, int r, double[::1] out):
    cdef int x, y, c, k, yy, dst
    cdef double acc
    for y in range(h):
        for x in range(w):
            dst = (y * w + x) * 3
            for c in range(3):
                acc = 0.0
                for k in range(-r, r + 1):
                    yy = y + k
                    if yy < 0:
                        yy = 0
                    elif yy > h - 1:
                        yy = h - 1
                    acc += wts[k + r] * pix[(yy * w + x) * 3 + c]
                out[dst + c] = acc


def scale_gain(double[::1] pix, int n3, double g, double[::1] out):
    cdef int i
    for i in range(n3):
        out[i] = pix[i] * g


def blend_white(double[::1] pix, int n3, double wt, double[::1] out):
    cdef int i
    for i in range(n3):
        out[i] = (1.0 - wt) * pix[i] + wt


def fill_rect(double[::1] pix, int w, int h, int x0, int y0, int x1, int y1,
              double r, double g, double b):
    cdef int x, y, row, dst
    for y in range(y0, y1):
        row = y * w
        for x in range(x0, x1):
            dst = (row + x) * 3
            pix[dst] = r
            pix[dst + 1] = g
            pix[dst + 2] = b


def fill_gradient(double[::1] pix, int w, int h,
                  double c0r, double c0g, double c0b,
                  double c1r, double c1g, double c1b,
                  int horizontal, double amp, double fx, double fy):
    cdef double wd = <double>w
    cdef double hd = <double>h
    cdef double t, ty, wave, v
    cdef int x, y, row, dst
    for y in range(h):
        row = y * w
        ty = y / (h - 1.0) if h > 1 else 0.0
        for x in range(w):
            if horizontal:
                t = x / (w - 1.0) if w > 1 else 0.0
            else:
                t = ty
            wave = amp * sin(TWO_PI * (fx * (x / wd) + fy * (y / hd)))
            dst = (row + x) * 3
            v = (c0r + (c1r - c0r) * t) + wave
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            pix[dst] = v
            v = (c0g + (c1g - c0g) * t) + wave
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            pix[dst + 1] = v
            v = (c0b + (c1b - c0b) * t) + wave
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            pix[dst + 2] = v


def draw_circle(double[::1] pix, int w, int h, double cx, double cy, double rad,
                double r, double g, double b):
    cdef double rr = rad * rad
    cdef double dx, dy
    cdef int x, y, row, dst
    cdef int y0 = <int>floor(cy - rad)
    cdef int y1 = (<int>floor(cy + rad)) + 1
    cdef int x0 = <int>floor(cx - rad)
    cdef int x1 = (<int>floor(cx + rad)) + 1
    if y0 < 0:
        y0 = 0
    if x0 < 0:
        x0 = 0
    if y1 > h:
        y1 = h
    if x1 > w:
        x1 = w
    for y in range(y0, y1):
        row = y * w
        dy = y - cy
        for x in range(x0, x1):
            dx = x - cx
            if dx * dx + dy * dy <= rr:
                dst = (row + x) * 3
                pix[dst] = r
                pix[dst + 1] = g
                pix[dst + 2] = b


def draw_triangle(double[::1] pix, int w, int h,
                  double ax, double ay, double bx, double by, double cx, double cy,
                  double r, double g, double b):
    cdef double minx = ax, maxx = ax, miny = ay, maxy = ay
    cdef double e0, e1, e2
    cdef int x, y, x0, x1, y0, y1, row, dst
    if bx < minx:
        minx = bx
    if cx < minx:
        minx = cx
    if bx > maxx:
        maxx = bx
    if cx > maxx:
        maxx = cx
    if by < miny:
        miny = by
    if cy < miny:
        miny = cy
    if by > maxy:
        maxy = by
    if cy > maxy:
        maxy = cy
    x0 = <int>floor(minx)
    x1 = (<int>floor(maxx)) + 1
    y0 = <int>floor(miny)
    y1 = (<int>floor(maxy)) + 1
    if x0 < 0:
        x0 = 0
    if y0 < 0:
        y0 = 0
    if x1 > w:
        x1 = w
    if y1 > h:
        y1 = h
    for y in range(y0, y1):
        row = y * w
        for x in range(x0, x1):
            e0 = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            e1 = (cx - bx) * (y - by) - (cy - by) * (x - bx)
            e2 = (ax - cx) * (y - cy) - (ay - cy) * (x - cx)
            if (e0 >= 0.0 and e1 >= 0.0 and e2 >= 0.0) or (
                e0 <= 0.0 and e1 <= 0.0 and e2 <= 0.0
            ):
                dst = (row + x) * 3
                pix[dst] = r
                pix[dst + 1] = g
                pix[dst + 2] = b


def draw_checker(double[::1] pix, int w, int h, int x0, int y0, int size, int cell,
                 double ar, double ag, double ab, double br, double bg, double bb):
    cdef int x, y, row, dst
    cdef int y1 = y0 + size
    cdef int x1 = x0 + size
    cdef int yy0 = y0 if y0 > 0 else 0
    cdef int xx0 = x0 if x0 > 0 else 0
    if y1 > h:
        y1 = h
    if x1 > w:
        x1 = w
    for y in range(yy0, y1):
        row = y * w
        for x in range(xx0, x1):
            dst = (row + x) * 3
            if (((x - x0) // cell) + ((y - y0) // cell)) % 2 == 0:
                pix[dst] = ar
                pix[dst + 1] = ag
                pix[dst + 2] = ab
            else:
                pix[dst] = br
                pix[dst + 1] = bg
                pix[dst + 2] = bb


def quantize_u8(double[::1] pix, int n, unsigned char[::1] out):
    cdef int i, iv
    for i in range(n):
        iv = <int>(pix[i] * 255.0 + 0.5)
        if iv < 0:
            iv = 0
        elif iv > 255:
            iv = 255
        out[i] = <unsigned char>iv


def u8_to_unit(const unsigned char[::1] buf, int n, double[::1] out):
    cdef int i
    for i in range(n):
        out[i] = buf[i] / 255.0


def mlp_forward(double[::1] w1, double[::1] b1, double[::1] w2, double[::1] b2,
                int nin, int nh, int nout,
                double[::1] x, double[::1] hbuf, double[::1] out):
    cdef int i, j, k, base
    cdef double xi, hj
    for j in range(nh):
        hbuf[j] = b1[j]
    for i in range(nin):
        xi = x[i]
        base = i * nh
        for j in range(nh):
            hbuf[j] += xi * w1[base + j]
    for j in range(nh):
        if hbuf[j] < 0.0:
            hbuf[j] = 0.0
    for k in range(nout):
        out[k] = b2[k]
    for j in range(nh):
        hj = hbuf[j]
        base = j * nout
        for k in range(nout):
            out[k] += hj * w2[base + k]


def mlp_loss_grad(double[::1] w1, double[::1] b1, double[::1] w2, double[::1] b2,
                  int nin, int nh, int nout,
                  double[::1] xs, double[::1] ys, int nb, double[::1] tw,
                  double[::1] gw1, double[::1] gb1, double[::1] gw2, double[::1] gb2,
                  double[::1] hbuf, double[::1] obuf, double[::1] gobuf, double[::1] ghbuf):
    cdef int s, i, j, k, base, xoff, yoff
    cdef double loss = 0.0, xi, hj, e, gh, inv
    for s in range(nb):
        xoff = s * nin
        yoff = s * nout
        for j in range(nh):
            hbuf[j] = b1[j]
        for i in range(nin):
            xi = xs[xoff + i]
            base = i * nh
            for j in range(nh):
                hbuf[j] += xi * w1[base + j]
        for j in range(nh):
            if hbuf[j] < 0.0:
                hbuf[j] = 0.0
        for k in range(nout):
            obuf[k] = b2[k]
        for j in range(nh):
            hj = hbuf[j]
            base = j * nout
            for k in range(nout):
                obuf[k] += hj * w2[base + k]
        for k in range(nout):
            e = obuf[k] - ys[yoff + k]
            loss += tw[k] * (e * e)
            gobuf[k] = (2.0 * tw[k]) * e
        for k in range(nout):
            gb2[k] += gobuf[k]
        for j in range(nh):
            hj = hbuf[j]
            base = j * nout
            gh = 0.0
            for k in range(nout):
                gw2[base + k] += hj * gobuf[k]
                gh += w2[base + k] * gobuf[k]
            ghbuf[j] = gh if hbuf[j] > 0.0 else 0.0
        for i in range(nin):
            xi = xs[xoff + i]
            base = i * nh
            for j in range(nh):
                gw1[base + j] += xi * ghbuf[j]
        for j in range(nh):
            gb1[j] += ghbuf[j]
    inv = 1.0 / nb
    for i in range(nin * nh):
        gw1[i] *= inv
    for j in range(nh):
        gb1[j] *= inv
    for i in range(nh * nout):
        gw2[i] *= inv
    for k in range(nout):
        gb2[k] *= inv
    return loss * inv


def adam_step(double[::1] p, double[::1] g, double[::1] m, double[::1] v, int n,
              double lr, double beta1, double beta2, double eps, double bc1, double bc2):
    cdef int i
    cdef double gi, mhat, vhat
    for i in range(n):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] = p[i] - lr * (mhat / (sqrt(vhat) + eps))
