#include "advlab/synth.hpp"

#include <cmath>
#include <numbers>

#include "advlab/rng.hpp"

namespace advlab {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

} // namespace

// Class identity lives in local, crop- and blur-tolerant structure: a faint
// per-class color cast plus four Gaussian blobs whose anchor positions,
// radii, signs and channel mixes are keyed to the class. A sinusoidal texture
// with per-image random orientation, frequency and phase is nuisance only.
Dataset make_synthetic_dataset(int count, std::uint64_t seed) {
    if (count < 0) throw std::invalid_argument("make_synthetic_dataset: negative count");
    Dataset ds;
    ds.num_classes = 10;
    ds.provenance = "synthetic(seed=" + std::to_string(seed) + ")";
    ds.records.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int k = i % 10;

        RngStream rng = RngStream::keyed(seed, i, 0, "synth");
        const double amp_tex = rng.uniform(0.06, 0.12);
        const double phase = rng.uniform(0.0, kTau);
        const double theta = rng.uniform(0.0, std::numbers::pi);
        const double freq = rng.uniform(1.0, 2.2);
        double dc[3];
        for (int c = 0; c < 3; ++c) dc[c] = rng.uniform(-0.05, 0.05);
        const double cast_jitter = rng.uniform(-0.015, 0.015);
        double cast[3];
        for (int c = 0; c < 3; ++c)
            cast[c] = (0.04 + cast_jitter) * std::cos(kTau * (k / 10.0 + c / 3.0));

        double bx[4], by[4], br[4], ba[4], bw[4][3];
        int bsign[4];
        for (int b = 0; b < 4; ++b) {
            const double ang = kTau * (k + 2.6 * b) / 10.0;
            bx[b] = 16.0 + 9.0 * std::cos(ang + 0.7 * b) + rng.uniform(-2.5, 2.5);
            by[b] = 16.0 + 9.0 * std::sin(1.3 * ang + 0.4) + rng.uniform(-2.5, 2.5);
            br[b] = 4.5 + 1.2 * ((k + b) % 3) + rng.uniform(-0.5, 0.5);
            ba[b] = rng.uniform(0.20, 0.30);
            bsign[b] = (k + b) % 2 == 0 ? 1 : -1;
            for (int c = 0; c < 3; ++c)
                bw[b][c] = 0.5 + 0.5 * std::cos(kTau * ((k + 2.0 * b) / 10.0 + c / 3.0));
        }

        ImageRecord rec;
        rec.label = k;
        rec.pixels = TensorF({3, 32, 32});
        const double ct = std::cos(theta), st = std::sin(theta);
        std::size_t idx = 0;
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < 32; ++y) {
                const double v = (y + 0.5) / 32.0;
                for (int x = 0; x < 32; ++x, ++idx) {
                    const double u = (x + 0.5) / 32.0;
                    const double noise = rng.uniform(-0.10, 0.10);
                    double val = 0.5 + dc[c] + cast[c] +
                                 amp_tex * std::sin(kTau * freq * (ct * u + st * v) + phase) +
                                 noise;
                    for (int b = 0; b < 4; ++b) {
                        const double dx = x - bx[b], dy = y - by[b];
                        val += bsign[b] * ba[b] * bw[b][c] *
                               std::exp(-(dx * dx + dy * dy) / (2.0 * br[b] * br[b]));
                    }
                    val = std::min(1.0, std::max(0.0, val));
                    const int byte = static_cast<int>(std::lround(val * 255.0));
                    rec.pixels.data[idx] = static_cast<float>(byte) / 255.0f;
                }
            }
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

std::string make_synthetic_cifar_bytes(int count, std::uint64_t seed) {
    return serialize_cifar10(make_synthetic_dataset(count, seed));
}

} // namespace advlab
