#include "irs/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irs::array {

using sf::kPi;

void ArraySpec::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("ArraySpec: radius must be > 0");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("ArraySpec: sample_rate must be > 0");
  if (mic_dirs.empty()) throw std::invalid_argument("ArraySpec: no microphones");
  for (size_t i = 0; i < mic_dirs.size(); ++i) {
    for (size_t j = i + 1; j < mic_dirs.size(); ++j) {
      if (sf::angle_between(mic_dirs[i], mic_dirs[j]) < 1e-9) {
        throw std::invalid_argument("ArraySpec: microphones " + std::to_string(i + 1) + " and " +
                                    std::to_string(j + 1) + " share a direction");
      }
    }
  }
}

std::string to_string(ShConvention c) { return c == ShConvention::n3d ? "n3d" : "sn3d"; }

ShConvention sh_convention_from_string(const std::string& s) {
  if (s == "n3d") return ShConvention::n3d;
  if (s == "sn3d") return ShConvention::sn3d;
  throw std::invalid_argument("unknown SH convention '" + s + "' (expected n3d or sn3d)");
}

void EncodingConfig::validate(const ArraySpec& array) const {
  if (order < 0) throw std::invalid_argument("EncodingConfig: order must be >= 0");
  if (num_sh_channels(order) > array.num_mics()) {
    throw std::invalid_argument("EncodingConfig: order " + std::to_string(order) + " needs " +
                                std::to_string(num_sh_channels(order)) + " microphones, array has " +
                                std::to_string(array.num_mics()));
  }
  if (!std::isfinite(reg_max_gain_db)) {
    throw std::invalid_argument("EncodingConfig: reg_max_gain_db must be finite");
  }
  if (trunc_order && (*trunc_order < 0 || *trunc_order > kMaxTruncOrder)) {
    throw std::invalid_argument("EncodingConfig: trunc_order outside [0, 60]");
  }
}

int acn_degree(int acn) { return static_cast<int>(std::floor(std::sqrt(static_cast<double>(acn)))); }

int auto_trunc_order(double kr) {
  return std::min(static_cast<int>(std::ceil(kr)) + 10, kMaxTruncOrder);
}

void radial_fn_all(int n_max, double kr, std::vector<cplx>& out) {
  out.resize(static_cast<size_t>(n_max) + 1);
  if (kr <= kKrFloor) {
    // b_n ~ z^n / ((n+1)(2n-1)!!)
    double zn = 1.0;
    double dfact = 1.0;  // (2n-1)!!
    for (int n = 0; n <= n_max; ++n) {
      if (n > 0) {
        zn *= kr;
        dfact *= (2 * n - 1);
      }
      out[n] = zn / ((n + 1) * dfact);
    }
    return;
  }
  std::vector<cplx> hd;
  sf::sph_hankel1_deriv_all(n_max, kr, hd);
  const cplx i1{0.0, 1.0};
  for (int n = 0; n <= n_max; ++n) {
    const cplx denom = kr * kr * hd[n];
    out[n] = std::isfinite(std::abs(denom)) ? i1 / denom : cplx{0.0, 0.0};
  }
}

cplx radial_fn(int n, double kr) {
  std::vector<cplx> v;
  radial_fn_all(n, kr, v);
  return v[n];
}

namespace {

cplx i_pow(int n) {
  switch (n & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

cplx plane_wave_response(double k, double psi, double radius, int trunc) {
  std::vector<cplx> b;
  std::vector<double> p;
  radial_fn_all(trunc, k * radius, b);
  sf::legendre_all(trunc, std::cos(psi), p);
  cplx h{0.0, 0.0};
  for (int n = 0; n <= trunc; ++n) h += i_pow(n) * static_cast<double>(2 * n + 1) * b[n] * p[n];
  return h;
}

cplx mic_response(double k, double psi, double radius, int trunc) {
  return std::conj(plane_wave_response(k, kPi - psi, radius, trunc));
}

cplx modal_strength(int n, double kr) { return 4.0 * kPi * i_pow(n) * std::conj(radial_fn(n, kr)); }

Eigen::MatrixXcd sh_matrix(const ArraySpec& array, int order) {
  const int nch = num_sh_channels(order);
  Eigen::MatrixXcd y(array.num_mics(), nch);
  for (int mic = 0; mic < array.num_mics(); ++mic) {
    for (int n = 0; n <= order; ++n) {
      for (int m = -n; m <= n; ++m) y(mic, acn_index(n, m)) = sf::sph_harmonic(n, m, array.mic_dirs[mic]);
    }
  }
  return y;
}

Eigen::MatrixXcd pseudo_inverse(const Eigen::MatrixXcd& a, double rcond) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = rcond * (s.size() ? s(0) : 0.0);
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

double condition_number(const Eigen::MatrixXcd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

std::vector<cplx> regularized_inverse_modal(double kr, int order, double reg_max_gain_db) {
  std::vector<cplx> b;
  radial_fn_all(order, kr, b);
  std::vector<cplx> w(static_cast<size_t>(order) + 1);
  const double inv_d0 = 1.0 / std::abs(4.0 * kPi * b[0]);
  const double limit = std::pow(10.0, reg_max_gain_db / 20.0) * inv_d0;
  for (int n = 0; n <= order; ++n) {
    const cplx d = 4.0 * kPi * i_pow(n) * std::conj(b[n]);
    if (n == 0) {
      w[n] = 1.0 / d;
      continue;
    }
    const cplx phase = std::conj(i_pow(n));  // 1/d_n -> L (-i)^n as kR -> 0
    const double mag_d = std::abs(d);
    if (mag_d == 0.0) {
      w[n] = limit * phase;
      continue;
    }
    const cplx inv = 1.0 / d;
    const double mag = 1.0 / mag_d;
    w[n] = inv * (2.0 * limit / kPi) * std::atan(kPi * mag / (2.0 * limit)) / mag;
  }
  return w;
}

Encoder::Encoder(ArraySpec array, EncodingConfig cfg) : array_(std::move(array)), cfg_(cfg) {
  array_.validate();
  cfg_.validate(array_);
  y_ = sh_matrix(array_, cfg_.order);
  y_pinv_ = pseudo_inverse(y_);
}

Eigen::MatrixXcd Encoder::matrix(double k) const {
  const auto w = regularized_inverse_modal(k * array_.radius, cfg_.order, cfg_.reg_max_gain_db);
  Eigen::MatrixXcd e = y_pinv_;
  for (int row = 0; row < e.rows(); ++row) e.row(row) *= w[acn_degree(row)];
  return e;
}

ShSpectrum Encoder::encode(const MicSpectrum& x) const {
  if (x.values.size() != array_.num_mics()) {
    throw std::invalid_argument("encode_sh: spectrum has " + std::to_string(x.values.size()) +
                                " values, array has " + std::to_string(array_.num_mics()) + " mics");
  }
  if (x.k < 0.0) throw std::invalid_argument("encode_sh: negative wave number");
  return {matrix(x.k) * x.values, x.k};
}

ShSpectrum encode_sh(const MicSpectrum& x, const ArraySpec& array, const EncodingConfig& cfg) {
  return Encoder(array, cfg).encode(x);
}

Eigen::MatrixXcd real_sh_conversion(int order, ShConvention convention) {
  const int nch = num_sh_channels(order);
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(nch, nch);
  const double r2 = std::sqrt(2.0);
  const cplx i1{0.0, 1.0};
  for (int n = 0; n <= order; ++n) {
    const double scale = convention == ShConvention::n3d ? std::sqrt(4.0 * kPi)
                                                         : std::sqrt(4.0 * kPi / (2 * n + 1));
    t(acn_index(n, 0), acn_index(n, 0)) = scale;
    for (int mu = 1; mu <= n; ++mu) {
      const double sgn = (mu % 2 == 0) ? 1.0 : -1.0;
      // cosine-type channel (m = +mu)
      t(acn_index(n, mu), acn_index(n, mu)) = scale * sgn / r2;
      t(acn_index(n, mu), acn_index(n, -mu)) = scale / r2;
      // sine-type channel (m = -mu)
      t(acn_index(n, -mu), acn_index(n, -mu)) = scale / (r2 * i1);
      t(acn_index(n, -mu), acn_index(n, mu)) = -scale * sgn / (r2 * i1);
    }
  }
  return t;
}

double real_sh(int n, int m, const sf::SphDirection& dir, ShConvention convention) {
  const double scale = convention == ShConvention::n3d ? std::sqrt(4.0 * kPi)
                                                       : std::sqrt(4.0 * kPi / (2 * n + 1));
  const int mu = std::abs(m);
  const double sgn = (mu % 2 == 0) ? 1.0 : -1.0;
  const cplx y = sf::sph_harmonic(n, mu, dir);
  double r;
  if (m == 0) {
    r = y.real();
  } else if (m > 0) {
    r = std::sqrt(2.0) * sgn * y.real();
  } else {
    r = std::sqrt(2.0) * sgn * y.imag();
  }
  return scale * r;
}

namespace {

// em32 capsule layout as (colatitude, azimuth) in degrees.
constexpr double kEm32[32][2] = {
    {69, 0},    {90, 32},   {111, 0},   {90, 328},  {32, 0},    {55, 45},   {90, 69},
    {125, 45},  {148, 0},   {125, 315}, {90, 291},  {55, 315},  {21, 91},   {58, 90},
    {121, 90},  {159, 89},  {69, 180},  {90, 212},  {111, 180}, {90, 148},  {32, 180},
    {55, 225},  {90, 249},  {125, 225}, {148, 180}, {125, 135}, {90, 111},  {55, 135},
    {21, 269},  {58, 270},  {122, 270}, {159, 271}};

}  // namespace

ArraySpec default_em32(double sample_rate) {
  ArraySpec spec;
  spec.name = "em32";
  spec.radius = 0.042;
  spec.sample_rate = sample_rate;
  for (const auto& row : kEm32) {
    double az = row[1] > 180.0 ? row[1] - 360.0 : row[1];
    spec.mic_dirs.push_back(sf::SphDirection::from_degrees(az, 90.0 - row[0]));
  }
  return spec;
}

ArraySpec parse_array_text(const std::string& text, double sample_rate, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_radius = false;
  ArraySpec spec;
  spec.name = name;
  spec.sample_rate = sample_rate;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("array file line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    line = line.substr(first);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    if (!have_radius) {
      const std::string key = "radius_m=";
      if (line.rfind(key, 0) != 0) fail("expected header 'radius_m=<float>'");
      const std::string value = line.substr(key.size());
      size_t used = 0;
      try {
        spec.radius = std::stod(value, &used);
      } catch (const std::exception&) {
        fail("invalid radius '" + value + "'");
      }
      if (used != value.size()) fail("trailing characters after radius");
      have_radius = true;
      continue;
    }
    std::istringstream row(line);
    int index = 0;
    double az = 0.0, el = 0.0;
    std::string extra;
    if (!(row >> index >> az >> el)) fail("expected 'index azimuth_deg elevation_deg'");
    if (row >> extra) fail("unexpected trailing field '" + extra + "'");
    if (index != spec.num_mics() + 1) {
      fail("index " + std::to_string(index) + " out of sequence (expected " +
           std::to_string(spec.num_mics() + 1) + ")");
    }
    if (az < -180.0 || az > 360.0) fail("azimuth out of range");
    if (el < -90.0 || el > 90.0) fail("elevation out of range");
    spec.mic_dirs.push_back(sf::SphDirection::from_degrees(az, el));
  }
  if (!have_radius) throw std::runtime_error("array file: missing 'radius_m=' header");
  spec.validate();
  return spec;
}

ArraySpec load_array_file(const std::filesystem::path& path, double sample_rate) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open array file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_array_text(ss.str(), sample_rate, path.stem().string());
}

void save_array_file(const std::filesystem::path& path, const ArraySpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write array file " + path.string());
  out.precision(17);
  out << "radius_m=" << spec.radius << "\n";
  for (int i = 0; i < spec.num_mics(); ++i) {
    out << (i + 1) << ' ' << spec.mic_dirs[i].azimuth * 180.0 / kPi << ' '
        << spec.mic_dirs[i].elevation * 180.0 / kPi << "\n";
  }
}

}  // namespace irs::array
