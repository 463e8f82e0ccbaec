#include "urbdiff/coreg.hpp"

#include <algorithm>
#include <cmath>

namespace urbdiff {

void CoregConfig::validate() const {
    if (pyramid_levels < 1) throw ConfigError("coreg: pyramid_levels must be >= 1");
    if (window_radius < 1) throw ConfigError("coreg: window_radius must be >= 1");
    if (iterations_per_level < 1) throw ConfigError("coreg: iterations_per_level must be >= 1");
    if (rank_radius < 1) throw ConfigError("coreg: rank_radius must be >= 1");
}

std::vector<float> rank_filter(const std::vector<float>& img, int width, int height, int radius) {
    if (radius < 1) throw ConfigError("rank_filter: radius must be >= 1");
    if (width <= 2 * radius || height <= 2 * radius)
        throw ConfigError("rank_filter: image dimensions must exceed 2*radius");
    if (static_cast<std::int64_t>(img.size()) != static_cast<std::int64_t>(width) * height)
        throw ShapeError("rank_filter: buffer size does not match dimensions");

    const int win = 2 * radius + 1;
    const float scale = 1.0f / static_cast<float>(win * win - 1);
    std::vector<float> out(img.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const float center = img[static_cast<std::size_t>(y) * width + x];
            int smaller = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int sy = std::clamp(y + dy, 0, height - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int sx = std::clamp(x + dx, 0, width - 1);
                    if (img[static_cast<std::size_t>(sy) * width + sx] < center) ++smaller;
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = smaller * scale;
        }
    return out;
}

namespace {

// Window sums with borders clipped to the image (no replication weighting).
std::vector<double> box_sum(const std::vector<double>& src, int w, int h, int r) {
    std::vector<double> rows(src.size()), out(src.size());
    std::vector<double> prefix(static_cast<std::size_t>(w) + 1);
    for (int y = 0; y < h; ++y) {
        prefix[0] = 0.0;
        for (int x = 0; x < w; ++x)
            prefix[x + 1] = prefix[x] + src[static_cast<std::size_t>(y) * w + x];
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - r), hi = std::min(w - 1, x + r);
            rows[static_cast<std::size_t>(y) * w + x] = prefix[hi + 1] - prefix[lo];
        }
    }
    std::vector<double> col_prefix(static_cast<std::size_t>(h) + 1);
    for (int x = 0; x < w; ++x) {
        col_prefix[0] = 0.0;
        for (int y = 0; y < h; ++y)
            col_prefix[y + 1] = col_prefix[y] + rows[static_cast<std::size_t>(y) * w + x];
        for (int y = 0; y < h; ++y) {
            const int lo = std::max(0, y - r), hi = std::min(h - 1, y + r);
            out[static_cast<std::size_t>(y) * w + x] = col_prefix[hi + 1] - col_prefix[lo];
        }
    }
    return out;
}

float sample_clamped(const float* img, int w, int h, double sx, double sy) {
    sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = sx - x0, fy = sy - y0;
    const double v00 = img[static_cast<std::size_t>(y0) * w + x0];
    const double v01 = img[static_cast<std::size_t>(y0) * w + x1];
    const double v10 = img[static_cast<std::size_t>(y1) * w + x0];
    const double v11 = img[static_cast<std::size_t>(y1) * w + x1];
    return static_cast<float>((v00 * (1.0 - fx) + v01 * fx) * (1.0 - fy) +
                              (v10 * (1.0 - fx) + v11 * fx) * fy);
}

float sample_clamped(const std::vector<float>& img, int w, int h, double sx, double sy) {
    return sample_clamped(img.data(), w, h, sx, sy);
}

}  // namespace

FlowField flow_level(const std::vector<float>& ref, const std::vector<float>& mov, int width,
                     int height, FlowField init, const CoregConfig& cfg) {
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (ref.size() != n || mov.size() != n)
        throw ShapeError("flow_level: image buffers do not match dimensions");
    if (init.width != width || init.height != height)
        throw ShapeError("flow_level: init flow dimensions mismatch");

    // Spatial gradients of the (fixed) reference image.
    std::vector<double> ix(n), iy(n);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int xm = std::max(0, x - 1), xp = std::min(width - 1, x + 1);
            const int ym = std::max(0, y - 1), yp = std::min(height - 1, y + 1);
            ix[static_cast<std::size_t>(y) * width + x] =
                0.5 * (ref[static_cast<std::size_t>(y) * width + xp] -
                       ref[static_cast<std::size_t>(y) * width + xm]);
            iy[static_cast<std::size_t>(y) * width + x] =
                0.5 * (ref[static_cast<std::size_t>(yp) * width + x] -
                       ref[static_cast<std::size_t>(ym) * width + x]);
        }
    std::vector<double> ixx(n), ixy(n), iyy(n);
    for (std::size_t i = 0; i < n; ++i) {
        ixx[i] = ix[i] * ix[i];
        ixy[i] = ix[i] * iy[i];
        iyy[i] = iy[i] * iy[i];
    }
    const int r = cfg.window_radius;
    const std::vector<double> gxx = box_sum(ixx, width, height, r);
    const std::vector<double> gxy = box_sum(ixy, width, height, r);
    const std::vector<double> gyy = box_sum(iyy, width, height, r);
    const double eps = 1e-4 * static_cast<double>(2 * r + 1) * (2 * r + 1);

    FlowField flow = std::move(init);
    std::vector<double> rx(n), ry(n), sq(n);
    std::vector<float> cand_u(n), cand_v(n);
    auto residuals = [&](const std::vector<float>& u, const std::vector<float>& v) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * width + x;
                const double movw = sample_clamped(mov, width, height, x + u[i], y + v[i]);
                const double resid = ref[i] - movw;
                rx[i] = ix[i] * resid;
                ry[i] = iy[i] * resid;
                sq[i] = resid * resid;
            }
    };
    for (int iter = 0; iter < cfg.iterations_per_level; ++iter) {
        residuals(flow.u, flow.v);
        const std::vector<double> bx = box_sum(rx, width, height, r);
        const std::vector<double> by = box_sum(ry, width, height, r);
        const std::vector<double> energy_before = box_sum(sq, width, height, r);
        for (std::size_t i = 0; i < n; ++i) {
            cand_u[i] = flow.u[i];
            cand_v[i] = flow.v[i];
            const double a = gxx[i], b = gxy[i], c = gyy[i];
            const double lambda_min = 0.5 * ((a + c) - std::sqrt((a - c) * (a - c) + 4 * b * b));
            if (lambda_min < eps) continue;  // ill-conditioned: keep prior flow
            const double det = a * c - b * b;
            // Trust region: the linearization only holds near the current
            // warp, so bound each step to one pixel per axis.
            cand_u[i] += static_cast<float>(std::clamp((c * bx[i] - b * by[i]) / det, -1.0, 1.0));
            cand_v[i] += static_cast<float>(std::clamp((a * by[i] - b * bx[i]) / det, -1.0, 1.0));
        }
        // Accept a step only where it lowers the windowed residual energy.
        // Pixels whose windows land in uncorrelated content would otherwise
        // random-walk away on near-singular G^-1 b jumps.
        residuals(cand_u, cand_v);
        const std::vector<double> energy_after = box_sum(sq, width, height, r);
        for (std::size_t i = 0; i < n; ++i)
            if (energy_after[i] <= energy_before[i]) {
                flow.u[i] = cand_u[i];
                flow.v[i] = cand_v[i];
            }
    }
    return flow;
}

Raster warp_bilinear(const Raster& img, const FlowField& flow,
                     std::vector<std::uint8_t>* valid) {
    if (flow.width != img.width || flow.height != img.height)
        throw ShapeError("warp_bilinear: flow dimensions mismatch");
    Raster out = Raster::create(img.width, img.height, img.bands, img.geo, img.band_ids);
    if (valid) valid->assign(static_cast<std::size_t>(img.width) * img.height, 1);

    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            const double sx = x + static_cast<double>(flow.u[i]);
            const double sy = y + static_cast<double>(flow.v[i]);
            if (valid && (sx < 0.0 || sx > img.width - 1 || sy < 0.0 || sy > img.height - 1))
                (*valid)[i] = 0;
            for (int band = 0; band < img.bands; ++band)
                out.band_data(band)[i] =
                    sample_clamped(img.band_data(band), img.width, img.height, sx, sy);
        }
    return out;
}

namespace {

// Separable 5-tap binomial blur with edge replication.
std::vector<float> binomial5(const std::vector<float>& img, int w, int h) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    std::vector<float> out(tmp.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += k[t + 2] * img[static_cast<std::size_t>(y) * w + std::clamp(x + t, 0, w - 1)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += k[t + 2] * tmp[static_cast<std::size_t>(std::clamp(y + t, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
        }
    return out;
}

// Pyramid reduction: 5-tap binomial blur, then decimation by two.
std::vector<float> pyr_down(const std::vector<float>& img, int w, int h, int& ow, int& oh) {
    const std::vector<float> blur = binomial5(img, w, h);
    ow = (w + 1) / 2;
    oh = (h + 1) / 2;
    std::vector<float> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            out[static_cast<std::size_t>(y) * ow + x] =
                blur[static_cast<std::size_t>(2 * y) * w + 2 * x];
    return out;
}

// Upsamples a flow field to (fw, fh), doubling the displacement values.
FlowField upsample_flow(const FlowField& coarse, int fw, int fh) {
    FlowField fine = FlowField::zero(fw, fh);
    for (int y = 0; y < fh; ++y)
        for (int x = 0; x < fw; ++x) {
            const double sx = (x + 0.5) * coarse.width / fw - 0.5;
            const double sy = (y + 0.5) * coarse.height / fh - 0.5;
            const std::size_t i = static_cast<std::size_t>(y) * fw + x;
            fine.u[i] = 2.0f * sample_clamped(coarse.u, coarse.width, coarse.height, sx, sy);
            fine.v[i] = 2.0f * sample_clamped(coarse.v, coarse.width, coarse.height, sx, sy);
        }
    return fine;
}

}  // namespace

CoregResult coregister(const Raster& ref, const Raster& mov, const CoregConfig& cfg) {
    cfg.validate();
    if (ref.width != mov.width || ref.height != mov.height || ref.bands != mov.bands)
        throw ShapeError("coregister: rasters must share dimensions and band count");
    const int min_dim = std::min(ref.width, ref.height);
    const int level_floor = std::max(2 * cfg.window_radius + 1, 2 * cfg.rank_radius + 1);
    const int required = (1 << (cfg.pyramid_levels - 1)) * level_floor;
    if (min_dim < required)
        throw ConfigError("coregister: image of " + std::to_string(min_dim) +
                          " px cannot support " + std::to_string(cfg.pyramid_levels) +
                          " pyramid levels with window radius " +
                          std::to_string(cfg.window_radius) + " (needs >= " +
                          std::to_string(required) + ")");

    auto mean_band = [&](const Raster& r) {
        std::vector<float> mean(static_cast<std::size_t>(r.width) * r.height, 0.0f);
        for (int band = 0; band < r.bands; ++band) {
            const float* src = r.band_data(band);
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += src[i];
        }
        const float inv = 1.0f / static_cast<float>(r.bands);
        for (float& v : mean) v *= inv;
        return mean;
    };

    // Mean-band Gaussian pyramid first; the rank filter runs per level. Rank
    // images concentrate their energy at the pixel scale, so filtering once
    // and then decimating would leave the coarse levels structureless.
    struct Level {
        std::vector<float> ref, mov;
        int w = 0, h = 0;
    };
    std::vector<Level> pyr(cfg.pyramid_levels);
    pyr[0].ref = mean_band(ref);
    pyr[0].mov = mean_band(mov);
    pyr[0].w = ref.width;
    pyr[0].h = ref.height;
    for (int lev = 1; lev < cfg.pyramid_levels; ++lev) {
        pyr[lev].ref = pyr_down(pyr[lev - 1].ref, pyr[lev - 1].w, pyr[lev - 1].h, pyr[lev].w,
                                pyr[lev].h);
        int w2 = 0, h2 = 0;
        pyr[lev].mov = pyr_down(pyr[lev - 1].mov, pyr[lev - 1].w, pyr[lev - 1].h, w2, h2);
    }
    // Rank images carry their signal at the pixel scale, which keeps the
    // matching basin under a pixel; a binomial blur after ranking widens it
    // to the couple of pixels each level must absorb.
    for (auto& lev : pyr) {
        lev.ref = binomial5(rank_filter(lev.ref, lev.w, lev.h, cfg.rank_radius), lev.w, lev.h);
        lev.mov = binomial5(rank_filter(lev.mov, lev.w, lev.h, cfg.rank_radius), lev.w, lev.h);
    }

    FlowField flow = FlowField::zero(pyr.back().w, pyr.back().h);
    for (int lev = cfg.pyramid_levels - 1; lev >= 0; --lev) {
        flow = flow_level(pyr[lev].ref, pyr[lev].mov, pyr[lev].w, pyr[lev].h, std::move(flow),
                          cfg);
        if (lev > 0) flow = upsample_flow(flow, pyr[lev - 1].w, pyr[lev - 1].h);
    }

    CoregResult result;
    result.warped = warp_bilinear(mov, flow, &result.valid);
    result.flow = std::move(flow);
    return result;
}

}  // namespace urbdiff
