/* Row-blocked two-layer ReLU MLP, forward and backward.
 *
 * x is (N x din) row-major, W1 (din x H), W2 (H x dout). Rows are processed
 * in blocks transposed into small column buffers so every inner loop runs
 * over the row index with unit stride and no aliasing, which lets the
 * compiler vectorize it.
 */
#ifndef DAGRCA_MLP_CORE_H
#define DAGRCA_MLP_CORE_H

#include <stddef.h>
#include <stdlib.h>
#include <string.h>

#define MLP_BLOCK 128

/* Scalar-input specialization (din == 1, dout <= 2), which covers every
 * MLP in the model at latent width 1. A chunk of MLP_NV * 4 rows is held
 * in vector registers through the whole hidden loop; gradient sums for the
 * hidden weights are kept per lane and reduced once at the end. */
typedef double mlp_vd __attribute__((vector_size(32)));
typedef long long mlp_vl __attribute__((vector_size(32)));
#define MLP_VL 4
#define MLP_NV 4
#define MLP_R (MLP_VL * MLP_NV)

static inline mlp_vd mlp_relu(mlp_vd p, mlp_vl *mask)
{
    *mask = p > 0.0;
    return (mlp_vd)((mlp_vl)p & *mask);
}

/* Copy rows r0.. of a (N x dout) array into per-output lane buffers,
 * padding with zeros past N. */
static inline void mlp_gather(const double *restrict src, ptrdiff_t r0, ptrdiff_t nb, int dout,
                              mlp_vd dst[][MLP_NV])
{
    double tmp[MLP_R];
    for (int o = 0; o < dout; o++) {
        for (int r = 0; r < MLP_R; r++) tmp[r] = r < nb ? src[(r0 + r) * dout + o] : 0.0;
        memcpy(dst[o], tmp, sizeof(tmp));
    }
}

static inline __attribute__((always_inline)) void
mlp_forward_d1(ptrdiff_t N, ptrdiff_t H, const int dout, const double *restrict x,
               const double *restrict W1, const double *restrict b1,
               const double *restrict W2, const double *restrict b2, double *restrict out)
{
    for (ptrdiff_t r0 = 0; r0 < N; r0 += MLP_R) {
        ptrdiff_t nb = N - r0 < MLP_R ? N - r0 : MLP_R;
        mlp_vd xv[1][MLP_NV], acc[2][MLP_NV];
        mlp_gather(x, r0, nb, 1, xv);
        for (int o = 0; o < dout; o++)
            for (int j = 0; j < MLP_NV; j++) acc[o][j] = (mlp_vd){0.0} * 0.0 + b2[o];
        for (ptrdiff_t k = 0; k < H; k++) {
            const double w = W1[k], b = b1[k];
            const double u0 = W2[k * dout], u1 = dout > 1 ? W2[k * dout + 1] : 0.0;
            for (int j = 0; j < MLP_NV; j++) {
                mlp_vl mask;
                mlp_vd z = mlp_relu(xv[0][j] * w + b, &mask);
                acc[0][j] += z * u0;
                if (dout > 1) acc[1][j] += z * u1;
            }
        }
        double tmp[MLP_R];
        for (int o = 0; o < dout; o++) {
            memcpy(tmp, acc[o], sizeof(tmp));
            for (ptrdiff_t r = 0; r < nb; r++) out[(r0 + r) * dout + o] = tmp[r];
        }
    }
}

static inline __attribute__((always_inline)) int
mlp_backward_d1(ptrdiff_t N, ptrdiff_t H, const int dout, const double *restrict x,
                const double *restrict W1, const double *restrict b1,
                const double *restrict W2, const double *restrict g, double *restrict gx,
                double *restrict gW1, double *restrict gb1, double *restrict gW2,
                double *restrict gb2)
{
    /* per-lane partial sums, slots per hidden unit: gW2[k, :dout], gb1[k], gW1[k] */
    const int S = dout + 2;
    mlp_vd *part = (mlp_vd *)aligned_alloc(32, sizeof(mlp_vd) * (size_t)(H * S + 1));
    if (!part) return -1;
    memset(part, 0, sizeof(mlp_vd) * (size_t)(H * S + 1));
    mlp_vd gsum[2] = {{0.0}, {0.0}};
    for (ptrdiff_t r0 = 0; r0 < N; r0 += MLP_R) {
        ptrdiff_t nb = N - r0 < MLP_R ? N - r0 : MLP_R;
        mlp_vd xv[1][MLP_NV], gv[2][MLP_NV], gxv[MLP_NV];
        /* padded lanes carry a zero adjoint, so they contribute nothing */
        mlp_gather(x, r0, nb, 1, xv);
        mlp_gather(g, r0, nb, dout, gv);
        for (int j = 0; j < MLP_NV; j++) {
            gxv[j] = (mlp_vd){0.0};
            for (int o = 0; o < dout; o++) gsum[o] += gv[o][j];
        }
        for (ptrdiff_t k = 0; k < H; k++) {
            const double w = W1[k], b = b1[k];
            const double u0 = W2[k * dout], u1 = dout > 1 ? W2[k * dout + 1] : 0.0;
            mlp_vd s0 = {0.0}, s1 = {0.0}, sb = {0.0}, sw = {0.0};
            for (int j = 0; j < MLP_NV; j++) {
                mlp_vl mask;
                mlp_vd z = mlp_relu(xv[0][j] * w + b, &mask);
                mlp_vd gk = gv[0][j] * u0;
                s0 += z * gv[0][j];
                if (dout > 1) {
                    s1 += z * gv[1][j];
                    gk += gv[1][j] * u1;
                }
                gk = (mlp_vd)((mlp_vl)gk & mask);
                sb += gk;
                sw += xv[0][j] * gk;
                gxv[j] += gk * w;
            }
            mlp_vd *pk = part + k * S;
            pk[0] += s0;
            if (dout > 1) pk[1] += s1;
            pk[dout] += sb;
            pk[dout + 1] += sw;
        }
        double tmp[MLP_R];
        memcpy(tmp, gxv, sizeof(tmp));
        for (ptrdiff_t r = 0; r < nb; r++) gx[r0 + r] = tmp[r];
    }
    for (ptrdiff_t k = 0; k < H; k++) {
        for (int s = 0; s < S; s++) {
            mlp_vd v = part[k * S + s];
            double acc = 0.0;
            for (int l = 0; l < MLP_VL; l++) acc += v[l];
            if (s < dout) gW2[k * dout + s] += acc;
            else if (s == dout) gb1[k] += acc;
            else gW1[k] += acc;
        }
    }
    for (int o = 0; o < dout; o++)
        for (int l = 0; l < MLP_VL; l++) gb2[o] += gsum[o][l];
    free(part);
    return 0;
}

static int mlp_forward_core(ptrdiff_t N, ptrdiff_t din, ptrdiff_t H, ptrdiff_t dout,
                            const double *restrict x, const double *restrict W1,
                            const double *restrict b1, const double *restrict W2,
                            const double *restrict b2, double *restrict out)
{
    if (din == 1) {
        switch (dout) {
        case 1: mlp_forward_d1(N, H, 1, x, W1, b1, W2, b2, out); return 0;
        case 2: mlp_forward_d1(N, H, 2, x, W1, b1, W2, b2, out); return 0;
        default: break;
        }
    }
    double *buf = (double *)malloc(sizeof(double) * MLP_BLOCK * (1 + din + dout));
    if (!buf) return -1;
    double *restrict a = buf;
    double *restrict xb = buf + MLP_BLOCK;
    double *restrict acc = xb + MLP_BLOCK * din;

    for (ptrdiff_t r0 = 0; r0 < N; r0 += MLP_BLOCK) {
        ptrdiff_t nb = N - r0 < MLP_BLOCK ? N - r0 : MLP_BLOCK;
        for (ptrdiff_t i = 0; i < din; i++)
            for (ptrdiff_t r = 0; r < nb; r++)
                xb[i * MLP_BLOCK + r] = x[(r0 + r) * din + i];
        for (ptrdiff_t o = 0; o < dout; o++)
            for (ptrdiff_t r = 0; r < nb; r++)
                acc[o * MLP_BLOCK + r] = b2[o];
        for (ptrdiff_t k = 0; k < H; k++) {
            const double bk = b1[k];
            for (ptrdiff_t r = 0; r < nb; r++) a[r] = bk;
            for (ptrdiff_t i = 0; i < din; i++) {
                const double w = W1[i * H + k];
                const double *restrict xi = xb + i * MLP_BLOCK;
                for (ptrdiff_t r = 0; r < nb; r++) a[r] += xi[r] * w;
            }
            for (ptrdiff_t r = 0; r < nb; r++) a[r] = a[r] > 0.0 ? a[r] : 0.0;
            for (ptrdiff_t o = 0; o < dout; o++) {
                const double w = W2[k * dout + o];
                double *restrict ao = acc + o * MLP_BLOCK;
                for (ptrdiff_t r = 0; r < nb; r++) ao[r] += a[r] * w;
            }
        }
        for (ptrdiff_t o = 0; o < dout; o++)
            for (ptrdiff_t r = 0; r < nb; r++)
                out[(r0 + r) * dout + o] = acc[o * MLP_BLOCK + r];
    }
    free(buf);
    return 0;
}

/* Gradients given the output adjoint g (N x dout). Output arrays gW1, gb1,
 * gW2, gb2 must be zeroed by the caller; gx is fully overwritten. */
static int mlp_backward_core(ptrdiff_t N, ptrdiff_t din, ptrdiff_t H, ptrdiff_t dout,
                             const double *restrict x, const double *restrict W1,
                             const double *restrict b1, const double *restrict W2,
                             const double *restrict g, double *restrict gx,
                             double *restrict gW1, double *restrict gb1,
                             double *restrict gW2, double *restrict gb2)
{
    if (din == 1) {
        switch (dout) {
        case 1: return mlp_backward_d1(N, H, 1, x, W1, b1, W2, g, gx, gW1, gb1, gW2, gb2);
        case 2: return mlp_backward_d1(N, H, 2, x, W1, b1, W2, g, gx, gW1, gb1, gW2, gb2);
        default: break;
        }
    }
    double *buf = (double *)malloc(sizeof(double) * MLP_BLOCK * (2 + 2 * din + dout));
    if (!buf) return -1;
    double *restrict pre = buf;
    double *restrict gk = buf + MLP_BLOCK;
    double *restrict xb = gk + MLP_BLOCK;
    double *restrict gxb = xb + MLP_BLOCK * din;
    double *restrict gb = gxb + MLP_BLOCK * din;

    for (ptrdiff_t r0 = 0; r0 < N; r0 += MLP_BLOCK) {
        ptrdiff_t nb = N - r0 < MLP_BLOCK ? N - r0 : MLP_BLOCK;
        for (ptrdiff_t i = 0; i < din; i++)
            for (ptrdiff_t r = 0; r < nb; r++) {
                xb[i * MLP_BLOCK + r] = x[(r0 + r) * din + i];
                gxb[i * MLP_BLOCK + r] = 0.0;
            }
        for (ptrdiff_t o = 0; o < dout; o++) {
            double s = 0.0;
            for (ptrdiff_t r = 0; r < nb; r++) {
                const double t = g[(r0 + r) * dout + o];
                gb[o * MLP_BLOCK + r] = t;
                s += t;
            }
            gb2[o] += s;
        }
        for (ptrdiff_t k = 0; k < H; k++) {
            const double bk = b1[k];
            for (ptrdiff_t r = 0; r < nb; r++) {
                pre[r] = bk;
                gk[r] = 0.0;
            }
            for (ptrdiff_t i = 0; i < din; i++) {
                const double w = W1[i * H + k];
                const double *restrict xi = xb + i * MLP_BLOCK;
                for (ptrdiff_t r = 0; r < nb; r++) pre[r] += xi[r] * w;
            }
            for (ptrdiff_t o = 0; o < dout; o++) {
                const double w = W2[k * dout + o];
                const double *restrict go = gb + o * MLP_BLOCK;
                double s = 0.0;
                for (ptrdiff_t r = 0; r < nb; r++) {
                    const double z = pre[r] > 0.0 ? pre[r] : 0.0;
                    s += z * go[r];
                    gk[r] += w * go[r];
                }
                gW2[k * dout + o] += s;
            }
            double sb = 0.0;
            for (ptrdiff_t r = 0; r < nb; r++) {
                const double t = pre[r] > 0.0 ? gk[r] : 0.0;
                gk[r] = t;
                sb += t;
            }
            gb1[k] += sb;
            for (ptrdiff_t i = 0; i < din; i++) {
                const double w = W1[i * H + k];
                const double *restrict xi = xb + i * MLP_BLOCK;
                double *restrict gxi = gxb + i * MLP_BLOCK;
                double s = 0.0;
                for (ptrdiff_t r = 0; r < nb; r++) {
                    s += xi[r] * gk[r];
                    gxi[r] += w * gk[r];
                }
                gW1[i * H + k] += s;
            }
        }
        for (ptrdiff_t i = 0; i < din; i++)
            for (ptrdiff_t r = 0; r < nb; r++)
                gx[(r0 + r) * din + i] = gxb[i * MLP_BLOCK + r];
    }
    free(buf);
    return 0;
}

#endif
