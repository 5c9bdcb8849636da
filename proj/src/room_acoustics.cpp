#include "irs/room_acoustics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "irs/fft.hpp"

namespace irs::room {

using sf::kPi;
using cplx = std::complex<double>;

std::string to_string(AbsorptionModel m) {
  switch (m) {
    case AbsorptionModel::sabine: return "sabine";
    case AbsorptionModel::eyring: return "eyring";
    case AbsorptionModel::calibrated: return "calibrated";
  }
  return "unknown";
}

AbsorptionModel absorption_model_from_string(const std::string& s) {
  if (s == "sabine") return AbsorptionModel::sabine;
  if (s == "eyring") return AbsorptionModel::eyring;
  if (s == "calibrated") return AbsorptionModel::calibrated;
  throw std::invalid_argument("unknown absorption model '" + s + "' (expected sabine, eyring or calibrated)");
}

void RoomSpec::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(dims(i) > 0.0) || !std::isfinite(dims(i))) throw std::invalid_argument("RoomSpec: dims must be > 0");
  }
  if (!(rt60 >= 0.05 && rt60 <= 2.0)) {
    throw std::invalid_argument("RoomSpec: rt60 " + std::to_string(rt60) + " outside [0.05, 2.0] s");
  }
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("RoomSpec: speed_of_sound must be > 0");
}

sf::SphDirection Placement::source_doa() const {
  const Vec3 v = orientation.transpose() * (source_pos - array_pos);
  return sf::SphDirection::from_vector(v.x(), v.y(), v.z());
}

void Placement::validate(const RoomSpec& room) const {
  for (int i = 0; i < 3; ++i) {
    if (!(source_pos(i) > 0.0 && source_pos(i) < room.dims(i))) {
      throw std::invalid_argument("Placement: source outside the room");
    }
    if (!(array_pos(i) > 0.0 && array_pos(i) < room.dims(i))) {
      throw std::invalid_argument("Placement: array outside the room");
    }
  }
  if (distance() < 0.3) {
    throw std::invalid_argument("Placement: source-array distance " + std::to_string(distance()) +
                                " m is below 0.3 m");
  }
  const Eigen::Matrix3d should_be_i = orientation.transpose() * orientation;
  if (!should_be_i.isIdentity(1e-9) || orientation.determinant() < 0.0) {
    throw std::invalid_argument("Placement: orientation is not a rotation");
  }
}

namespace {

// Block synthesis: arrivals in each 128-sample block are summed in a
// 256-point frame that starts 64 samples before the block.
constexpr int kFrame = 256;
constexpr int kBlock = 128;
constexpr int kMargin = 64;
constexpr int kBins = kFrame / 2 + 1;
constexpr int kGrid = 4097;  // samples of cos(psi) over [-1, 1]

double check_absorption(double alpha, const RoomSpec& room) {
  if (alpha > 0.99) {
    throw std::domain_error("rt60_to_absorption: room " + std::to_string(room.dims.x()) + "x" +
                            std::to_string(room.dims.y()) + "x" + std::to_string(room.dims.z()) +
                            " too small for rt60 " + std::to_string(room.rt60) + " s (alpha " +
                            std::to_string(alpha) + " > 0.99)");
  }
  return alpha;
}

}  // namespace

double rt60_to_absorption(const RoomSpec& room) {
  room.validate();
  return check_absorption(0.161 * room.volume() / (room.surface() * room.rt60), room);
}

double rt60_to_absorption_eyring(const RoomSpec& room) {
  room.validate();
  return check_absorption(1.0 - std::exp(-0.161 * room.volume() / (room.surface() * room.rt60)), room);
}

int default_max_order(double absorption) {
  if (!(absorption > 0.0 && absorption <= 1.0)) {
    throw std::invalid_argument("default_max_order: absorption must be in (0, 1]");
  }
  if (absorption >= 1.0) return 0;
  const double k = 6.0 * std::log(10.0) / -std::log(1.0 - absorption);
  return std::min(static_cast<int>(std::ceil(k)), kMaxOrderCap);
}

double schroeder_t60(std::span<const double> energy, double bin_width) {
  std::vector<double> edc(energy.size() + 1, 0.0);
  for (std::size_t i = energy.size(); i-- > 0;) edc[i] = edc[i + 1] + energy[i];
  if (!(edc[0] > 0.0)) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool reached = false;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    const double db = 10.0 * std::log10(std::max(edc[i] / edc[0], 1e-300));
    if (db < -35.0) {
      reached = true;
      break;
    }
    if (db <= -5.0) {
      const double x = static_cast<double>(i) * bin_width;
      sx += x;
      sy += db;
      sxx += x * x;
      sxy += x * db;
      ++n;
    }
  }
  if (!reached) return std::nan("");
  if (n < 2) return 0.0;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope < 0.0 ? -60.0 / slope : std::nan("");
}

namespace {

struct AxisImage {
  double coord;
  int count;
};

// Mirror coordinates along one axis are (1 - 2q) s + 2 n L with
// |n - q| + |n| reflections.
std::array<std::vector<AxisImage>, 3> axis_images(const RoomSpec& room, const Placement& placement,
                                                  int max_order, double max_distance) {
  std::array<std::vector<AxisImage>, 3> axes;
  const int n_lim = max_order / 2 + 1;
  for (int a = 0; a < 3; ++a) {
    const double l = room.dims(a);
    const double s = placement.source_pos(a);
    const double r = placement.array_pos(a);
    for (int n = -n_lim; n <= n_lim; ++n) {
      for (int q = 0; q <= 1; ++q) {
        const int count = std::abs(n - q) + std::abs(n);
        if (count > max_order) continue;
        const double coord = (1 - 2 * q) * s + 2.0 * n * l;
        if (std::abs(coord - r) > max_distance) continue;
        axes[a].push_back({coord, count});
      }
    }
  }
  return axes;
}

template <class F>
void for_each_image(const RoomSpec& room, const Placement& placement, int max_order, double max_distance, F&& f) {
  const auto axes = axis_images(room, placement, max_order, max_distance);
  const double d2max = max_distance * max_distance;
  const Vec3& r = placement.array_pos;
  for (const auto& ix : axes[0]) {
    const double dx2 = (ix.coord - r.x()) * (ix.coord - r.x());
    for (const auto& iy : axes[1]) {
      if (ix.count + iy.count > max_order) continue;
      const double dxy2 = dx2 + (iy.coord - r.y()) * (iy.coord - r.y());
      if (dxy2 > d2max) continue;
      for (const auto& iz : axes[2]) {
        const int order = ix.count + iy.count + iz.count;
        if (order > max_order) continue;
        const double d2 = dxy2 + (iz.coord - r.z()) * (iz.coord - r.z());
        if (d2 > d2max) continue;
        f(Vec3(ix.coord, iy.coord, iz.coord), order, std::sqrt(d2));
      }
    }
  }
}

constexpr double kCalibrationBin = 5e-4;  // seconds

// alpha whose incoherent image energy envelope has T60 == target.
class EnvelopeCalibrator {
 public:
  EnvelopeCalibrator(const RoomSpec& room, const Placement& placement, const SynthesisOptions& opts)
      : room_(room), max_order_(opts.max_order), min_gain_(opts.min_gain) {
    const double horizon = 1.2 * room.rt60;
    bins_ = static_cast<int>(std::ceil(horizon / kCalibrationBin));
    cap_ = std::min(max_order_.value_or(kMaxOrderCap), kMaxOrderCap);
    energy_.assign(static_cast<std::size_t>(cap_ + 1) * bins_, 0.0);
    for_each_image(room, placement, cap_, horizon * room.speed_of_sound, [&](const Vec3&, int order, double d) {
      const int b = std::min(static_cast<int>(d / room.speed_of_sound / kCalibrationBin), bins_ - 1);
      const double a = 1.0 / (4.0 * kPi * d);
      energy_[static_cast<std::size_t>(order) * bins_ + b] += a * a;
    });
  }

  double t60(double alpha) const {
    const double r = 1.0 - alpha;
    int lim = std::min(max_order_.value_or(default_max_order(alpha)), cap_);
    if (min_gain_ > 0.0) {
      lim = std::min(lim, static_cast<int>(std::floor(std::log(min_gain_) / (0.5 * std::log(r)) + 1e-9)));
    }
    std::vector<double> h(bins_, 0.0);
    double w = 1.0;
    for (int o = 0; o <= lim; ++o) {
      const double* row = energy_.data() + static_cast<std::size_t>(o) * bins_;
      for (int b = 0; b < bins_; ++b) h[b] += w * row[b];
      w *= r;
    }
    return schroeder_t60(h, kCalibrationBin);
  }

  double solve(double target) const {
    // NaN means the envelope never fell by 35 dB inside the horizon.
    auto too_long = [&](double alpha) {
      const double t = t60(alpha);
      return std::isnan(t) || t > target;
    };
    double lo = 1e-4, hi = 0.99;
    if (too_long(hi)) {
      throw std::domain_error("calibrated absorption: rt60 " + std::to_string(room_.rt60) +
                              " s is unreachable with alpha <= 0.99 for this room and placement");
    }
    if (!too_long(lo)) return lo;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      (too_long(mid) ? lo : hi) = mid;
    }
    return hi;
  }

 private:
  RoomSpec room_;
  std::optional<int> max_order_;
  double min_gain_;
  int bins_ = 0;
  int cap_ = 0;
  std::vector<double> energy_;
};

std::vector<double> omni_rir(const RoomSpec& room, const Placement& placement, double alpha,
                             const SynthesisOptions& opts, double fs, std::size_t length);

double calibrated_absorption(const RoomSpec& room, const Placement& placement, const SynthesisOptions& opts,
                             double fs) {
  const EnvelopeCalibrator env(room, placement, opts);
  const std::size_t length = min_rir_length(room, fs);
  double target = room.rt60;
  double alpha = env.solve(target);
  // Coherent summation leaves the signal decay a few percent off the
  // envelope; rescale the envelope target by the measured ratio.
  for (int it = 0; it < 4; ++it) {
    const auto h = omni_rir(room, placement, alpha, opts, fs, length);
    std::vector<double> e(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) e[i] = h[i] * h[i];
    const double measured = schroeder_t60(e, 1.0 / fs);
    if (!(measured > 0.0) || std::abs(measured / room.rt60 - 1.0) < 0.01) break;
    target *= room.rt60 / measured;
    alpha = env.solve(target);
  }
  return alpha;
}

}  // namespace

double wall_absorption(const RoomSpec& room, const Placement& placement, const SynthesisOptions& opts,
                       double sample_rate) {
  switch (room.absorption_model) {
    case AbsorptionModel::sabine: return rt60_to_absorption(room);
    case AbsorptionModel::eyring: return rt60_to_absorption_eyring(room);
    case AbsorptionModel::calibrated:
      room.validate();
      placement.validate(room);
      return calibrated_absorption(room, placement, opts, sample_rate);
  }
  throw std::invalid_argument("wall_absorption: unknown model");
}

std::vector<ImageSource> enumerate_image_sources(const RoomSpec& room, const Placement& placement,
                                                 int max_order, double min_gain, double max_distance,
                                                 std::optional<double> absorption) {
  if (max_order < 0) throw std::invalid_argument("enumerate_image_sources: max_order must be >= 0");
  room.validate();
  double alpha = 0.0;
  if (max_order > 0) {
    SynthesisOptions opts;
    opts.max_order = max_order;
    opts.min_gain = min_gain;
    alpha = absorption ? *absorption : wall_absorption(room, placement, opts);
  }
  const double beta = std::sqrt(1.0 - alpha);

  std::vector<ImageSource> out;
  for_each_image(room, placement, max_order, max_distance, [&](const Vec3& pos, int order, double d) {
    const double gain = order == 0 ? 1.0 : std::pow(beta, order);
    if (gain < min_gain) return;
    ImageSource img;
    img.position = pos;
    img.distance = d;
    img.order = order;
    img.gain = gain;
    img.delay = d / room.speed_of_sound;
    out.push_back(img);
  });
  std::sort(out.begin(), out.end(), [](const ImageSource& a, const ImageSource& b) {
    return std::tie(a.delay, a.order, a.position.x(), a.position.y(), a.position.z()) <
           std::tie(b.delay, b.order, b.position.x(), b.position.y(), b.position.z());
  });
  return out;
}

double band_limit_taper(double f_norm, double start) {
  if (f_norm <= start) return 1.0;
  if (f_norm >= 1.0) return 0.0;
  const double u = (f_norm - start) / (1.0 - start);
  auto s = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = s(1.0 - u);
  return a / (a + s(u));
}

std::size_t min_rir_length(const RoomSpec& room, double sample_rate) {
  return static_cast<std::size_t>(std::ceil(1.2 * room.rt60 * sample_rate - 1e-9));
}

namespace {


struct Prepared {
  std::vector<ImageSource> images;
  std::vector<Vec3> arrival;    // unit vector from array center toward each image
  std::vector<Vec3> mic_world;  // unit microphone directions in room coordinates
  double fs = 0.0;
};

Prepared prepare(const RoomSpec& room, const Placement& placement, const array::ArraySpec& array,
                 std::size_t length, const SynthesisOptions& opts) {
  room.validate();
  array.validate();
  placement.validate(room);
  if (length < min_rir_length(room, array.sample_rate)) {
    throw std::invalid_argument("simulate_mic_rirs: length " + std::to_string(length) +
                                " is below ceil(1.2 rt60 fs) = " +
                                std::to_string(min_rir_length(room, array.sample_rate)));
  }
  if (!(opts.taper_start > 0.0 && opts.taper_start < 1.0)) {
    throw std::invalid_argument("simulate_mic_rirs: taper_start must be in (0, 1)");
  }
  if (opts.highpass_hz < 0.0 || opts.highpass_hz >= 0.5 * array.sample_rate) {
    throw std::invalid_argument("simulate_mic_rirs: highpass_hz must be in [0, fs/2)");
  }
  const double alpha = wall_absorption(room, placement, opts, array.sample_rate);
  const int max_order = opts.max_order.value_or(default_max_order(alpha));
  const double max_dist = (static_cast<double>(length) + kMargin) / array.sample_rate * room.speed_of_sound;
  Prepared p;
  p.fs = array.sample_rate;
  p.images = enumerate_image_sources(room, placement, max_order, opts.min_gain, max_dist, alpha);
  p.arrival.reserve(p.images.size());
  for (const auto& img : p.images) {
    if (img.distance < 0.1) {
      throw std::domain_error("simulate_mic_rirs: order-" + std::to_string(img.order) + " image is " +
                              std::to_string(img.distance) + " m from the array center (< 0.1 m)");
    }
    p.arrival.push_back((img.position - placement.array_pos) / img.distance);
  }
  for (const auto& d : array.mic_dirs) {
    double x, y, z;
    d.to_vector(x, y, z);
    p.mic_world.push_back((placement.orientation * Vec3(x, y, z)).normalized());
  }
  return p;
}

// Per-bin series coefficients i^n (2n+1) conj(b_n(kR)), already multiplied by
// the band-limit taper, so that mic_response = sum_n coef[n] P_n(cos psi).
std::vector<std::vector<cplx>> response_coefficients(int n_fft, double radius, double fs, double c,
                                                     std::optional<int> trunc, double taper_start) {
  const int bins = n_fft / 2 + 1;
  std::vector<std::vector<cplx>> coef(bins);
  std::vector<cplx> b;
  for (int j = 0; j < bins; ++j) {
    const double k = 2.0 * kPi * (j * fs / n_fft) / c;
    const int nt = trunc.value_or(array::auto_trunc_order(k * radius));
    array::radial_fn_all(nt, k * radius, b);
    const double w = band_limit_taper(static_cast<double>(j) / (bins - 1), taper_start);
    coef[j].resize(nt + 1);
    cplx ip{1.0, 0.0};
    for (int n = 0; n <= nt; ++n) {
      coef[j][n] = w * ip * (2.0 * n + 1.0) * std::conj(b[n]);
      ip *= cplx{0.0, 1.0};
    }
  }
  return coef;
}

// Band-limited mic response on a uniform cos(psi) grid, [grid][bin].
struct ResponseTable {
  std::vector<cplx> h;
  const cplx* row(int g) const { return h.data() + static_cast<std::size_t>(g) * kBins; }
};

std::shared_ptr<const ResponseTable> response_table(double radius, double fs, double c,
                                                    std::optional<int> trunc, double taper_start) {
  using Key = std::tuple<double, double, double, int, double>;
  static std::map<Key, std::shared_ptr<const ResponseTable>> cache;
  static std::mutex mutex;
  const Key key{radius, fs, c, trunc.value_or(-1), taper_start};
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const auto coef = response_coefficients(kFrame, radius, fs, c, trunc, taper_start);
  std::size_t n_max = 0;
  for (const auto& c_j : coef) n_max = std::max(n_max, c_j.size() - 1);
  auto table = std::make_shared<ResponseTable>();
  table->h.resize(static_cast<std::size_t>(kGrid) * kBins);
  std::vector<double> leg;
  for (int g = 0; g < kGrid; ++g) {
    const double x = -1.0 + 2.0 * g / (kGrid - 1);
    sf::legendre_all(static_cast<int>(n_max), x, leg);
    cplx* row = table->h.data() + static_cast<std::size_t>(g) * kBins;
    for (int j = 0; j < kBins; ++j) {
      cplx acc{};
      for (std::size_t n = 0; n < coef[j].size(); ++n) acc += coef[j][n] * leg[n];
      row[j] = acc;
    }
  }
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.emplace(key, std::move(table));
  return it->second;
}

// Sums images [first, last) into one 256-sample frame per microphone starting
// at sample s0. Writes M * kFrame samples to out.
void synthesize_block(const Prepared& p, const ResponseTable& table, std::size_t first, std::size_t last,
                      long long s0, const dsp::RealFft& fft, double* out) {
  const int m_count = static_cast<int>(p.mic_world.size());
  std::vector<cplx> acc(static_cast<std::size_t>(m_count) * kBins, cplx{});
  std::vector<cplx> phasor(kBins);
  for (std::size_t i = first; i < last; ++i) {
    const auto& img = p.images[i];
    const double tau = img.delay * p.fs - static_cast<double>(s0);
    const double amp = img.gain / (4.0 * kPi * img.distance);
    const cplx step = std::polar(1.0, -2.0 * kPi * tau / kFrame);
    cplx ph{amp, 0.0};
    for (int j = 0; j < kBins; ++j) {
      phasor[j] = ph;
      ph *= step;
    }
    for (int m = 0; m < m_count; ++m) {
      const double x = std::clamp(p.mic_world[m].dot(p.arrival[i]), -1.0, 1.0);
      const double pos = (x + 1.0) * 0.5 * (kGrid - 1);
      const int g = std::min(static_cast<int>(pos), kGrid - 2);
      const double t = pos - g;
      const cplx* h0 = table.row(g);
      const cplx* h1 = table.row(g + 1);
      cplx* a = acc.data() + static_cast<std::size_t>(m) * kBins;
      for (int j = 0; j < kBins; ++j) a[j] += phasor[j] * (h0[j] + t * (h1[j] - h0[j]));
    }
  }
  for (int m = 0; m < m_count; ++m) {
    fft.inverse(std::span<const cplx>(acc.data() + static_cast<std::size_t>(m) * kBins, kBins),
                std::span<double>(out + static_cast<std::size_t>(m) * kFrame, kFrame));
  }
}


void apply_highpass(Signal& s, double cutoff_hz) {
  if (cutoff_hz <= 0.0) return;
  for (int c = 0; c < s.channels(); ++c) dsp::highpass_butter2(s.channel(c), cutoff_hz, s.sample_rate());
}

// Band-limited, high-passed pressure at the array center with the sphere
// removed. Used only to calibrate the absorption.
std::vector<double> omni_rir(const RoomSpec& room, const Placement& placement, double alpha,
                             const SynthesisOptions& opts, double fs, std::size_t length) {
  const int max_order = opts.max_order.value_or(default_max_order(alpha));
  const double beta = std::sqrt(1.0 - alpha);
  const double max_dist = (static_cast<double>(length) + kMargin) / fs * room.speed_of_sound;
  const std::size_t n_blocks = (length + kMargin) / kBlock + 1;
  std::vector<std::vector<cplx>> spec(n_blocks);
  for_each_image(room, placement, max_order, max_dist, [&](const Vec3&, int order, double d) {
    const double gain = order == 0 ? 1.0 : std::pow(beta, order);
    if (gain < opts.min_gain) return;
    const double pos = d / room.speed_of_sound * fs;
    const std::size_t b = static_cast<std::size_t>(pos / kBlock);
    if (b >= n_blocks) return;
    auto& acc = spec[b];
    if (acc.empty()) acc.assign(kBins, cplx{});
    const double tau = pos - (static_cast<double>(b) * kBlock - kMargin);
    const cplx step = std::polar(1.0, -2.0 * kPi * tau / kFrame);
    cplx ph{gain / (4.0 * kPi * d), 0.0};
    for (int j = 0; j < kBins; ++j) {
      acc[j] += ph;
      ph *= step;
    }
  });
  std::vector<double> taper(kBins);
  for (int j = 0; j < kBins; ++j) taper[j] = band_limit_taper(static_cast<double>(j) / (kBins - 1), opts.taper_start);
  const dsp::RealFft fft(kFrame);
  std::vector<double> frame(kFrame);
  std::vector<double> out(length, 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    if (spec[b].empty()) continue;
    for (int j = 0; j < kBins; ++j) spec[b][j] *= taper[j];
    fft.inverse(spec[b], frame);
    const long long s0 = static_cast<long long>(b) * kBlock - kMargin;
    for (int i = 0; i < kFrame; ++i) {
      const long long t = s0 + i;
      if (t >= 0 && t < static_cast<long long>(length)) out[t] += frame[i];
    }
  }
  if (opts.highpass_hz > 0.0) dsp::highpass_butter2(out, opts.highpass_hz, fs);
  return out;
}

}  // namespace

Signal simulate_mic_rirs(const RoomSpec& room, const Placement& placement, const array::ArraySpec& array,
                         std::size_t length_samples, const SynthesisOptions& opts) {
  const Prepared p = prepare(room, placement, array, length_samples, opts);
  const auto table = response_table(array.radius, array.sample_rate, room.speed_of_sound, opts.trunc_order,
                                    opts.taper_start);
  const int m_count = array.num_mics();
  const dsp::RealFft fft(kFrame);

  // Image ranges per block of arrival times; images are sorted by delay.
  const long long n_blocks = static_cast<long long>((length_samples + kMargin) / kBlock) + 1;
  std::vector<std::size_t> bounds(static_cast<std::size_t>(n_blocks) + 1, p.images.size());
  {
    std::size_t i = 0;
    for (long long b = 0; b < n_blocks; ++b) {
      bounds[b] = i;
      while (i < p.images.size() && p.images[i].delay * p.fs < static_cast<double>((b + 1) * kBlock)) ++i;
    }
    bounds[n_blocks] = i;
  }

  std::vector<double> frames(static_cast<std::size_t>(n_blocks) * m_count * kFrame, 0.0);
  auto run = [&](long long b) {
    if (bounds[b] == bounds[b + 1]) return;
    synthesize_block(p, *table, bounds[b], bounds[b + 1], b * kBlock - kMargin, fft,
                     frames.data() + static_cast<std::size_t>(b) * m_count * kFrame);
  };
  if (opts.exec == dsp::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long b = 0; b < n_blocks; ++b) run(b);
  } else {
    for (long long b = 0; b < n_blocks; ++b) run(b);
  }

  Signal out(m_count, length_samples, array.sample_rate);
  const long long len = static_cast<long long>(length_samples);
  for (long long b = 0; b < n_blocks; ++b) {
    if (bounds[b] == bounds[b + 1]) continue;
    const long long s0 = b * kBlock - kMargin;
    for (int m = 0; m < m_count; ++m) {
      const double* src = frames.data() + (static_cast<std::size_t>(b) * m_count + m) * kFrame;
      auto dst = out.channel(m);
      for (int i = 0; i < kFrame; ++i) {
        const long long s = s0 + i;
        if (s >= 0 && s < len) dst[s] += src[i];
      }
    }
  }
  apply_highpass(out, opts.highpass_hz);
  return out;
}

Signal simulate_mic_rirs_reference(const RoomSpec& room, const Placement& placement,
                                   const array::ArraySpec& array, std::size_t length_samples,
                                   const SynthesisOptions& opts) {
  const Prepared p = prepare(room, placement, array, length_samples, opts);
  const int n_fft = dsp::next_pow2(static_cast<long long>(length_samples));
  const int bins = n_fft / 2 + 1;
  const auto coef = response_coefficients(n_fft, array.radius, array.sample_rate, room.speed_of_sound,
                                          opts.trunc_order, opts.taper_start);
  std::size_t n_max = 0;
  for (const auto& c_j : coef) n_max = std::max(n_max, c_j.size() - 1);
  const int m_count = array.num_mics();
  std::vector<cplx> spec(static_cast<std::size_t>(m_count) * bins, cplx{});
  std::vector<double> leg;
  for (std::size_t i = 0; i < p.images.size(); ++i) {
    const auto& img = p.images[i];
    const double amp = img.gain / (4.0 * kPi * img.distance);
    for (int m = 0; m < m_count; ++m) {
      sf::legendre_all(static_cast<int>(n_max), std::clamp(p.mic_world[m].dot(p.arrival[i]), -1.0, 1.0), leg);
      for (int j = 0; j < bins; ++j) {
        cplx h{};
        for (std::size_t n = 0; n < coef[j].size(); ++n) h += coef[j][n] * leg[n];
        const double phase = -2.0 * kPi * std::fmod(j * img.delay * p.fs, static_cast<double>(n_fft)) / n_fft;
        spec[static_cast<std::size_t>(m) * bins + j] += amp * std::polar(1.0, phase) * h;
      }
    }
  }
  const dsp::RealFft fft(n_fft);
  std::vector<double> buf(n_fft);
  Signal out(m_count, length_samples, array.sample_rate);
  for (int m = 0; m < m_count; ++m) {
    fft.inverse(std::span<const cplx>(spec.data() + static_cast<std::size_t>(m) * bins, bins), buf);
    auto dst = out.channel(m);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(length_samples), dst.begin());
  }
  apply_highpass(out, opts.highpass_hz);
  return out;
}

Signal encode_mic_signals(const Signal& mics, const array::Encoder& encoder, double speed_of_sound) {
  if (mics.channels() != encoder.array().num_mics()) {
    throw std::invalid_argument("encode_mic_signals: " + std::to_string(mics.channels()) +
                                " channels for a " + std::to_string(encoder.array().num_mics()) +
                                "-microphone array");
  }
  const double fs = mics.sample_rate();
  if (!(fs > 0.0)) throw std::invalid_argument("encode_mic_signals: sample rate not set");
  const std::size_t len = mics.frames();
  const int n_fft = dsp::next_pow2(static_cast<long long>(len) + 2048);
  const int bins = n_fft / 2 + 1;
  const dsp::RealFft fft(n_fft);
  const int m_count = mics.channels();
  const int nch = encoder.channels();

  Eigen::MatrixXcd x(m_count, bins);
  std::vector<double> buf(n_fft);
  std::vector<cplx> spec(bins);
  for (int m = 0; m < m_count; ++m) {
    std::fill(buf.begin(), buf.end(), 0.0);
    auto src = mics.channel(m);
    std::copy(src.begin(), src.end(), buf.begin());
    fft.forward(buf, spec);
    for (int j = 0; j < bins; ++j) x(m, j) = spec[j];
  }
  const Eigen::MatrixXcd t = array::real_sh_conversion(encoder.config().order, encoder.config().export_convention);
  Eigen::MatrixXcd y(nch, bins);
  for (int j = 0; j < bins; ++j) {
    const double k = 2.0 * kPi * (j * fs / n_fft) / speed_of_sound;
    y.col(j) = t * (encoder.matrix(k) * x.col(j));
  }
  // Only the omnidirectional channel carries DC.
  y.col(0).tail(nch - 1).setZero();

  Signal out(nch, len, fs);
  for (int c = 0; c < nch; ++c) {
    for (int j = 0; j < bins; ++j) spec[j] = y(c, j);
    fft.inverse(spec, buf);
    auto dst = out.channel(c);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(len), dst.begin());
  }
  return out;
}

ShIR simulate_sh_rir(const RoomSpec& room, const Placement& placement, const array::Encoder& encoder,
                     std::size_t length_samples, const SynthesisOptions& opts) {
  ShIR ir;
  ir.channels = encode_mic_signals(simulate_mic_rirs(room, placement, encoder.array(), length_samples, opts),
                                   encoder, room.speed_of_sound);
  ir.room = room;
  ir.placement = placement;
  ir.doa = placement.source_doa();
  ir.distance = placement.distance();
  ir.order = encoder.config().order;
  ir.convention = encoder.config().export_convention;
  return ir;
}

}  // namespace irs::room
