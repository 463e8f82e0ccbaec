#include "urbdiff/slic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace urbdiff {

void SlicConfig::validate() const {
    if (n_segments < 1) throw ConfigError("slic: n_segments must be >= 1");
    if (!(compactness > 0.0)) throw ConfigError("slic: compactness must be > 0");
    if (max_iters < 1) throw ConfigError("slic: max_iters must be >= 1");
}

namespace {

struct Center {
    std::vector<double> spectral;
    double x = 0.0, y = 0.0;
};

double center_distance2(const Raster& norm, const Center& c, int x, int y, double inv_s2_m2) {
    double spec = 0.0;
    for (int band = 0; band < norm.bands; ++band) {
        const double d = norm.at(band, y, x) - c.spectral[band];
        spec += d * d;
    }
    const double dx = x - c.x, dy = y - c.y;
    return spec + (dx * dx + dy * dy) * inv_s2_m2;
}

}  // namespace

SegmentMap slic(const Raster& r, const SlicConfig& cfg, SlicStats* stats, Warnings* warnings) {
    cfg.validate();
    const int w = r.width, h = r.height;
    const std::int64_t n = r.pixels();
    if (n <= 0) throw ShapeError("slic: empty raster");
    if (cfg.n_segments > n)
        throw ConfigError("slic: n_segments (" + std::to_string(cfg.n_segments) +
                          ") exceeds pixel count (" + std::to_string(n) + ")");

    const Raster norm = normalize(r, NormalizeMode::kZScore, warnings);
    const double S = std::sqrt(static_cast<double>(n) / cfg.n_segments);
    const int nx = std::max(1, static_cast<int>(std::llround(w / S)));
    const int ny = std::max(1, static_cast<int>(std::llround(h / S)));
    const double inv_s2_m2 = cfg.compactness * cfg.compactness / (S * S);

    // Gradient magnitude over normalized bands, for seed perturbation.
    auto gradient = [&](int x, int y) {
        const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
        const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
        double g = 0.0;
        for (int band = 0; band < norm.bands; ++band) {
            const double gx = norm.at(band, y, xp) - norm.at(band, y, xm);
            const double gy = norm.at(band, yp, x) - norm.at(band, ym, x);
            g += gx * gx + gy * gy;
        }
        return g;
    };

    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int gy = 0; gy < ny; ++gy)
        for (int gx = 0; gx < nx; ++gx) {
            int sx = std::clamp(static_cast<int>((gx + 0.5) * w / nx - 0.5), 0, w - 1);
            int sy = std::clamp(static_cast<int>((gy + 0.5) * h / ny - 0.5), 0, h - 1);
            // Move to the strictly lowest-gradient spot in the 3x3 neighborhood.
            double best = gradient(sx, sy);
            int bx = sx, by = sy;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int qx = sx + dx, qy = sy + dy;
                    if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
                    const double g = gradient(qx, qy);
                    if (g < best) {
                        best = g;
                        bx = qx;
                        by = qy;
                    }
                }
            Center c;
            c.x = bx;
            c.y = by;
            c.spectral.resize(norm.bands);
            for (int band = 0; band < norm.bands; ++band)
                c.spectral[band] = norm.at(band, by, bx);
            centers.push_back(std::move(c));
        }
    const int k = static_cast<int>(centers.size());

    const int half = static_cast<int>(std::ceil(std::max(
                         {S, static_cast<double>(w) / nx, static_cast<double>(h) / ny}))) +
                     1;

    std::vector<std::int32_t> labels(n, -1);
    std::vector<double> best_dist(n);
    if (stats) {
        stats->energy.clear();
        stats->iterations = 0;
    }

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        // Assignment. The incumbent label stays a candidate so the energy
        // cannot increase even when windows shift with center motion.
        for (std::int64_t i = 0; i < n; ++i) {
            if (labels[i] >= 0) {
                best_dist[i] = center_distance2(norm, centers[labels[i]],
                                                static_cast<int>(i % w),
                                                static_cast<int>(i / w), inv_s2_m2);
            } else {
                best_dist[i] = std::numeric_limits<double>::infinity();
            }
        }
        for (int c = 0; c < k; ++c) {
            const Center& ctr = centers[c];
            const int x0 = std::max(0, static_cast<int>(ctr.x) - half);
            const int x1 = std::min(w - 1, static_cast<int>(ctr.x) + half);
            const int y0 = std::max(0, static_cast<int>(ctr.y) - half);
            const int y1 = std::min(h - 1, static_cast<int>(ctr.y) + half);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const std::int64_t i = static_cast<std::int64_t>(y) * w + x;
                    const double d = center_distance2(norm, ctr, x, y, inv_s2_m2);
                    if (d < best_dist[i]) {
                        best_dist[i] = d;
                        labels[i] = c;
                    }
                }
        }
        for (std::int64_t i = 0; i < n; ++i)
            if (labels[i] < 0) throw NumericFault("slic: pixel left unassigned");

        // Update: centers move to the mean of their pixels.
        std::vector<double> acc(static_cast<std::size_t>(k) * (norm.bands + 3), 0.0);
        for (std::int64_t i = 0; i < n; ++i) {
            const int c = labels[i];
            double* a = acc.data() + static_cast<std::size_t>(c) * (norm.bands + 3);
            for (int band = 0; band < norm.bands; ++band)
                a[band] += norm.at(band, static_cast<int>(i / w), static_cast<int>(i % w));
            a[norm.bands] += static_cast<double>(i % w);
            a[norm.bands + 1] += static_cast<double>(i / w);
            a[norm.bands + 2] += 1.0;
        }
        for (int c = 0; c < k; ++c) {
            const double* a = acc.data() + static_cast<std::size_t>(c) * (norm.bands + 3);
            const double cnt = a[norm.bands + 2];
            if (cnt <= 0.0) continue;  // orphan center keeps its position
            for (int band = 0; band < norm.bands; ++band)
                centers[c].spectral[band] = a[band] / cnt;
            centers[c].x = a[norm.bands] / cnt;
            centers[c].y = a[norm.bands + 1] / cnt;
        }

        if (stats) {
            double energy = 0.0;
            for (std::int64_t i = 0; i < n; ++i)
                energy += center_distance2(norm, centers[labels[i]], static_cast<int>(i % w),
                                           static_cast<int>(i / w), inv_s2_m2);
            stats->energy.push_back(energy);
            stats->iterations = iter + 1;
        }
    }

    // Connected components of the raw labeling (4-connectivity).
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::int64_t> comp_size;
    std::vector<std::int64_t> stack;
    for (std::int64_t i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        const std::int32_t id = static_cast<std::int32_t>(comp_size.size());
        comp_size.push_back(0);
        stack.push_back(i);
        comp[i] = id;
        while (!stack.empty()) {
            const std::int64_t p = stack.back();
            stack.pop_back();
            ++comp_size[id];
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            const std::int64_t nb[4] = {p - 1, p + 1, p - w, p + w};
            const bool ok[4] = {x > 0, x < w - 1, y > 0, y < h - 1};
            for (int t = 0; t < 4; ++t)
                if (ok[t] && comp[nb[t]] < 0 && labels[nb[t]] == labels[p]) {
                    comp[nb[t]] = id;
                    stack.push_back(nb[t]);
                }
        }
    }

    if (cfg.enforce_connectivity && comp_size.size() > 1) {
        const std::int64_t min_size =
            std::max<std::int64_t>(1, static_cast<std::int64_t>(S * S / 4.0));
        // Union-find over components; small ones merge into their largest
        // 4-adjacent neighbor, repeated until stable.
        std::vector<std::int32_t> root(comp_size.size());
        for (std::size_t c = 0; c < root.size(); ++c) root[c] = static_cast<std::int32_t>(c);
        auto find = [&](std::int32_t c) {
            while (root[c] != c) {
                root[c] = root[root[c]];
                c = root[c];
            }
            return c;
        };
        std::vector<std::int64_t> merged_size = comp_size;
        for (int pass = 0; pass < 64; ++pass) {
            bool changed = false;
            for (std::int32_t c = 0; c < static_cast<std::int32_t>(comp_size.size()); ++c) {
                const std::int32_t rc = find(c);
                if (rc != c || merged_size[rc] >= min_size) continue;
                // Scan this root's pixels for the largest adjacent root.
                std::int32_t best_root = -1;
                std::int64_t best_size = -1;
                for (std::int64_t i = 0; i < n; ++i) {
                    if (find(comp[i]) != rc) continue;
                    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
                    const std::int64_t nb[4] = {i - 1, i + 1, i - w, i + w};
                    const bool ok[4] = {x > 0, x < w - 1, y > 0, y < h - 1};
                    for (int t = 0; t < 4; ++t) {
                        if (!ok[t]) continue;
                        const std::int32_t nr = find(comp[nb[t]]);
                        if (nr == rc) continue;
                        if (merged_size[nr] > best_size ||
                            (merged_size[nr] == best_size && nr < best_root)) {
                            best_size = merged_size[nr];
                            best_root = nr;
                        }
                    }
                }
                if (best_root >= 0) {
                    root[rc] = best_root;
                    merged_size[best_root] += merged_size[rc];
                    changed = true;
                }
            }
            if (!changed) break;
        }
        for (std::int64_t i = 0; i < n; ++i) comp[i] = find(comp[i]);
    }

    // Dense relabel in first-appearance (row-major) order.
    SegmentMap map;
    map.width = w;
    map.height = h;
    map.labels.assign(n, -1);
    std::vector<std::int32_t> remap(comp_size.size(), -1);
    for (std::int64_t i = 0; i < n; ++i) {
        std::int32_t& id = remap[comp[i]];
        if (id < 0) {
            id = map.count++;
            map.sizes.push_back(0);
        }
        map.labels[i] = id;
        ++map.sizes[id];
    }
    return map;
}

BandRoles resolve_band_roles(const std::vector<std::string>& band_ids) {
    auto canon = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return s;
    };
    BandRoles roles;
    for (std::size_t i = 0; i < band_ids.size(); ++i) {
        const std::string id = canon(band_ids[i]);
        if (id == "B4" || id == "B04") roles.red = static_cast<int>(i);
        else if (id == "B8" || id == "B08") roles.nir = static_cast<int>(i);
    }
    if (roles.red < 0 || roles.nir < 0)
        throw ConfigError("cannot resolve red (B4) and nir (B8) band roles from band ids");
    return roles;
}

SegmentFeatures superpixel_features(const Raster& r, const SegmentMap& s, const BandRoles& roles) {
    if (r.width != s.width || r.height != s.height)
        throw ShapeError("superpixel_features: raster and segment map dimensions differ");
    if (roles.red < 0 || roles.red >= r.bands || roles.nir < 0 || roles.nir >= r.bands)
        throw ConfigError("superpixel_features: band roles out of range");

    const int B = r.bands;
    SegmentFeatures f;
    f.n_segments = s.count;
    f.n_features = 2 * B + 1;
    f.values.assign(static_cast<std::size_t>(s.count) * f.n_features, 0.0);
    f.sizes.assign(s.count, 0);

    std::vector<double> sum(static_cast<std::size_t>(s.count) * B, 0.0);
    std::vector<double> sumsq(sum.size(), 0.0);
    std::vector<double> ndvi_sum(s.count, 0.0);
    for (std::int64_t i = 0; i < s.pixels(); ++i) {
        const std::int32_t id = s.labels[i];
        f.sizes[id] += 1;
        for (int band = 0; band < B; ++band) {
            const double v = r.samples[static_cast<std::int64_t>(band) * s.pixels() + i];
            sum[static_cast<std::size_t>(id) * B + band] += v;
            sumsq[static_cast<std::size_t>(id) * B + band] += v * v;
        }
        const double red = r.samples[static_cast<std::int64_t>(roles.red) * s.pixels() + i];
        const double nir = r.samples[static_cast<std::int64_t>(roles.nir) * s.pixels() + i];
        ndvi_sum[id] += (nir - red) / (nir + red + 1e-6);
    }
    for (int id = 0; id < s.count; ++id) {
        const double cnt = static_cast<double>(f.sizes[id]);
        double* row = f.values.data() + static_cast<std::size_t>(id) * f.n_features;
        for (int band = 0; band < B; ++band) {
            const double mean = sum[static_cast<std::size_t>(id) * B + band] / cnt;
            const double var =
                std::max(0.0, sumsq[static_cast<std::size_t>(id) * B + band] / cnt - mean * mean);
            row[band] = mean;
            row[B + band] = std::sqrt(var);
        }
        row[2 * B] = ndvi_sum[id] / cnt;
    }
    return f;
}

void save_features_csv(const SegmentFeatures& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write features CSV '" + path + "'");
    const int B = (f.n_features - 1) / 2;
    out << "segment_id,pixels";
    for (int b = 0; b < B; ++b) out << ",mean_b" << b;
    for (int b = 0; b < B; ++b) out << ",std_b" << b;
    out << ",ndvi_mean\n";
    char buf[64];
    for (int id = 0; id < f.n_segments; ++id) {
        out << id << "," << f.sizes[id];
        const double* row = f.row(id);
        for (int j = 0; j < f.n_features; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw ConfigError("failed writing features CSV '" + path + "'");
}

SegmentFeatures load_features_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open features CSV '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("features CSV '" + path + "' is empty");
    int cols = 1;
    for (char c : line) cols += c == ',';
    if (cols < 3) throw ParseError("features CSV '" + path + "' header has too few columns");

    SegmentFeatures f;
    f.n_features = cols - 2;
    int expected_id = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) throw ParseError("features CSV: malformed row");
        if (std::stoi(cell) != expected_id)
            throw ParseError("features CSV '" + path + "': segment ids must be dense from 0");
        if (!std::getline(ss, cell, ',')) throw ParseError("features CSV: missing pixel count");
        f.sizes.push_back(std::stoll(cell));
        for (int j = 0; j < f.n_features; ++j) {
            if (!std::getline(ss, cell, ','))
                throw ParseError("features CSV '" + path + "': row " +
                                 std::to_string(expected_id) + " has too few values");
            f.values.push_back(std::stod(cell));
        }
        if (std::getline(ss, cell, ','))
            throw ParseError("features CSV '" + path + "': row " + std::to_string(expected_id) +
                             " has too many values");
        ++expected_id;
    }
    f.n_segments = expected_id;
    if (f.n_segments == 0) throw ParseError("features CSV '" + path + "' lists no segments");
    return f;
}

}  // namespace urbdiff
