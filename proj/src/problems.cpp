#include "tos/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "tos/random.hpp"
#include "tos/terms.hpp"

namespace tos {

using nlohmann::json;

void to_json(json& j, const ProblemSpec& s) {
  j = json{{"name", s.name},
           {"m", s.m},
           {"n", s.n},
           {"p", s.p},
           {"loss", s.loss},
           {"lambda", s.lambda},
           {"seed", s.seed},
           {"group_size", s.group_size},
           {"overlap", s.overlap},
           {"noise", s.noise},
           {"observed_fraction", s.observed_fraction},
           {"huber_delta", s.huber_delta},
           {"kernel_size", s.kernel_size},
           {"batch", s.batch}};
  j["dataset"] = s.dataset ? json(*s.dataset) : json(nullptr);
  j["g_f"] = s.g_f ? json(*s.g_f) : json(nullptr);
  j["l_f"] = s.l_f ? json(*s.l_f) : json(nullptr);
}

namespace {

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) {
    out = j.at(key).get<T>();
  } else {
    out.reset();
  }
}

}  // namespace

void from_json(const json& j, ProblemSpec& s) {
  ProblemSpec d = default_spec(j.at("name").get<std::string>());
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("m", d.m);
  get("n", d.n);
  get("p", d.p);
  get("loss", d.loss);
  get("lambda", d.lambda);
  get("seed", d.seed);
  get("group_size", d.group_size);
  get("overlap", d.overlap);
  get("noise", d.noise);
  get("observed_fraction", d.observed_fraction);
  get("huber_delta", d.huber_delta);
  get("kernel_size", d.kernel_size);
  get("batch", d.batch);
  read_opt(j, "dataset", d.dataset);
  read_opt(j, "g_f", d.g_f);
  read_opt(j, "l_f", d.l_f);
  s = d;
}

ProblemSpec default_spec(const std::string& name) {
  ProblemSpec s;
  s.name = name;
  if (name == "isotonic") {
    s.m = 100, s.n = 200, s.p = 1.0, s.loss = "lp_power", s.noise = 0.1;
  } else if (name == "portfolio") {
    s.m = 500, s.n = 10, s.loss = "least_squares";
  } else if (name == "grouplasso") {
    s.m = 100, s.n = 1002, s.loss = "logistic", s.lambda = 1e-3, s.group_size = 10, s.overlap = 2;
  } else if (name == "sparselowrank") {
    s.m = 100, s.n = 20, s.loss = "huber", s.lambda = 1e-2, s.noise = 1.0;
  } else if (name == "inpainting") {
    s.m = 64, s.n = 64, s.loss = "l1_residual", s.noise = 0.1, s.observed_fraction = 0.5;
  } else if (name == "tvdeblur") {
    s.m = 48, s.n = 40, s.loss = "least_squares", s.lambda = 1e-4, s.noise = 0.01, s.kernel_size = 3;
  } else {
    throw std::invalid_argument("unknown problem '" + name + "'");
  }
  return s;
}

std::string fingerprint(const ProblemSpec& spec) {
  ProblemSpec key = spec;
  key.g_f.reset();
  key.l_f.reset();
  const std::string text = json(key).dump();
  std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

namespace {

double mean_row_norm(const Matrix& a) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) total += a.row(i).norm();
  return total / static_cast<double>(a.rows());
}

BuiltProblem finish(ProblemSpec spec, std::string name, TermPtr g, TermPtr h,
                    std::shared_ptr<FirstOrderOracle> loss, OracleConstants c, Vector y0) {
  loss->declare(c);
  spec.g_f = c.subgradient_bound;
  spec.l_f = c.smoothness;
  BuiltProblem out{spec, make_problem(std::move(name), std::move(g), std::move(h), loss, std::move(y0)), loss, {}, 0, 0};
  return out;
}

}  // namespace

BuiltProblem make_isotonic(Eigen::Index m, Eigen::Index n, double p, std::uint64_t seed, double noise) {
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("make_isotonic: p must lie in [1, 2]");
  if (m < 2 || n < 2) throw std::invalid_argument("make_isotonic: m and n must be at least 2");
  RandomStream rng(seed);
  const Svd svd = dense_svd(draw_gaussian(rng, m, n));
  Vector s(svd.s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = 1.0 / static_cast<double>(i + 1);
  Matrix a = svd.u * s.asDiagonal() * svd.v.transpose();

  Vector truth = draw_gaussian(rng, n);
  std::sort(truth.data(), truth.data() + n);
  const Vector b = a * truth + noise * draw_gaussian(rng, m);

  ProblemSpec spec = default_spec("isotonic");
  spec.m = m, spec.n = n, spec.p = p, spec.seed = seed, spec.noise = noise;
  OracleConstants c;
  if (p == 1.0) c.subgradient_bound = std::sqrt(static_cast<double>(m));  // ||A|| = 1
  if (p == 2.0) c.smoothness = 1.0;
  LossOptions opts;
  opts.p = p;
  auto loss = std::make_shared<FirstOrderOracle>(LossKind::lp_power, std::make_shared<DenseMap>(a), b, opts);
  auto g = std::make_shared<PairwiseOrderIndicator>(PairwiseOrderIndicator::chain_pairs(n, 0));
  auto h = std::make_shared<PairwiseOrderIndicator>(PairwiseOrderIndicator::chain_pairs(n, 1));
  BuiltProblem out = finish(spec, "isotonic", g, h, loss, c, Vector::Zero(n));
  out.ground_truth = truth;
  return out;
}

Matrix synthetic_returns(Eigen::Index days, Eigen::Index assets, std::uint64_t seed) {
  if (days < 1 || assets < 1) throw std::invalid_argument("synthetic_returns: empty shape");
  RandomStream rng(seed);
  const Vector drift = 0.001 * draw_gaussian(rng, assets);
  Vector vol(assets);
  for (Eigen::Index j = 0; j < assets; ++j) vol(j) = 0.005 + 0.025 * rng.uniform();
  const Matrix shocks = draw_gaussian(rng, days, assets);
  Matrix r(days, assets);
  for (Eigen::Index i = 0; i < days; ++i) {
    for (Eigen::Index j = 0; j < assets; ++j) r(i, j) = drift(j) + vol(j) * shocks(i, j);
  }
  return r;
}

Matrix load_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw std::runtime_error("'" + path + "': non-numeric value in row " + std::to_string(rows.size() + 1));
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("'" + path + "': ragged row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("'" + path + "': empty dataset");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  require_finite(out, "returns");
  return out;
}

BuiltProblem make_portfolio(const Matrix& returns, LossKind loss_kind, Eigen::Index batch) {
  if (returns.rows() < 1 || returns.cols() < 1) throw std::invalid_argument("make_portfolio: empty dataset");
  if (loss_kind != LossKind::least_squares && loss_kind != LossKind::l1_residual) {
    throw std::invalid_argument("make_portfolio: loss must be least_squares or l1_residual");
  }
  const Eigen::Index days = returns.rows();
  const Eigen::Index n = returns.cols();
  const Vector a_av = returns.colwise().mean().transpose();
  const double target = a_av.mean();

  ProblemSpec spec = default_spec("portfolio");
  spec.m = days, spec.n = n, spec.loss = to_string(loss_kind), spec.batch = batch;
  const double norm_a = spectral_norm(returns);
  OracleConstants c;
  if (loss_kind == LossKind::least_squares) {
    c.smoothness = norm_a * norm_a;
  } else {
    c.subgradient_bound = norm_a * std::sqrt(static_cast<double>(days));
  }
  LossOptions opts;
  opts.batch = batch;
  auto loss = std::make_shared<FirstOrderOracle>(loss_kind, std::make_shared<DenseMap>(returns),
                                                 Vector::Constant(days, target), opts);
  auto g = std::make_shared<SimplexIndicator>();
  auto h = std::make_shared<HalfspaceIndicator>(a_av, target);
  return finish(spec, "portfolio", g, h, loss, c, Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

std::vector<IndexBlock> overlapping_groups(Eigen::Index n, Eigen::Index group_size, Eigen::Index overlap) {
  if (group_size < 1 || overlap < 0 || overlap >= group_size) {
    throw std::invalid_argument("overlapping_groups: need 0 <= overlap < group_size");
  }
  if (2 * overlap > group_size) {
    throw std::invalid_argument("overlapping_groups: overlap above half the group size breaks the two-family split");
  }
  const Eigen::Index stride = group_size - overlap;
  if (n < group_size || (n - overlap) % stride != 0) {
    throw std::invalid_argument("overlapping_groups: n - overlap must be a multiple of group_size - overlap");
  }
  std::vector<IndexBlock> groups;
  for (Eigen::Index start = 0; start + group_size <= n; start += stride) {
    IndexBlock gblock(static_cast<std::size_t>(group_size));
    for (Eigen::Index k = 0; k < group_size; ++k) gblock[static_cast<std::size_t>(k)] = start + k;
    groups.push_back(std::move(gblock));
  }
  return groups;
}

BuiltProblem make_group_lasso(const GroupLassoOptions& o) {
  if (o.loss != LossKind::logistic && o.loss != LossKind::hinge) {
    throw std::invalid_argument("make_group_lasso: loss must be logistic or hinge");
  }
  if (o.samples < 1) throw std::invalid_argument("make_group_lasso: need at least one sample");
  const auto groups = overlapping_groups(o.n, o.group_size, o.overlap);
  RandomStream rng(o.seed);
  const Matrix a = draw_gaussian(rng, o.samples, o.n);
  Vector truth = Vector::Zero(o.n);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (rng.uniform() < 0.1 || k == 0) {
      for (Eigen::Index i : groups[k]) truth(i) = rng.gaussian();
    }
  }
  const Vector noisy = a * truth + 0.1 * draw_gaussian(rng, o.samples);
  Vector labels(o.samples);
  for (Eigen::Index i = 0; i < o.samples; ++i) labels(i) = noisy(i) >= 0.0 ? 1.0 : -1.0;

  std::vector<IndexBlock> even, odd;
  for (std::size_t k = 0; k < groups.size(); ++k) (k % 2 == 0 ? even : odd).push_back(groups[k]);
  auto weights = [](const std::vector<IndexBlock>& gs) {
    std::vector<double> w;
    for (const auto& gb : gs) w.push_back(std::sqrt(static_cast<double>(gb.size())));
    return w;
  };

  ProblemSpec spec = default_spec("grouplasso");
  spec.m = o.samples, spec.n = o.n, spec.group_size = o.group_size, spec.overlap = o.overlap;
  spec.lambda = o.lambda, spec.loss = to_string(o.loss), spec.seed = o.seed;
  const double norm_a = spectral_norm(a);
  OracleConstants c;
  c.subgradient_bound = mean_row_norm(a);
  if (o.loss == LossKind::logistic) c.smoothness = norm_a * norm_a / (4.0 * static_cast<double>(o.samples));
  auto loss = std::make_shared<FirstOrderOracle>(o.loss, std::make_shared<DenseMap>(a), labels);
  TermPtr g = std::make_shared<GroupL2Term>(even, weights(even), o.lambda);
  TermPtr h = odd.empty() ? TermPtr(std::make_shared<ZeroTerm>())
                          : TermPtr(std::make_shared<GroupL2Term>(odd, weights(odd), o.lambda));
  BuiltProblem out = finish(spec, "grouplasso", g, h, loss, c, Vector::Zero(o.n));
  out.ground_truth = truth;
  return out;
}

BuiltProblem make_sparse_lowrank(Eigen::Index n, Eigen::Index measurements, double lambda, std::uint64_t seed,
                                 double noise, double huber_delta) {
  if (n < 2) throw std::invalid_argument("make_sparse_lowrank: n must be at least 2");
  if (measurements < 1) throw std::invalid_argument("make_sparse_lowrank: need at least one measurement");
  if (lambda < 0.0) throw std::invalid_argument("make_sparse_lowrank: lambda must be nonnegative");
  RandomStream rng(seed);
  const Eigen::Index rank = std::max<Eigen::Index>(1, n / 10);
  Matrix factor = Matrix::Zero(n, rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < rank; ++k) {
      if (rng.uniform() < 0.3) factor(i, k) = rng.gaussian();
    }
  }
  const Matrix truth = factor * factor.transpose();
  const Matrix sensing = draw_gaussian(rng, measurements, n * n);
  const Vector b = sensing * flatten(truth) + noise * draw_gaussian(rng, measurements);

  ProblemSpec spec = default_spec("sparselowrank");
  spec.m = measurements, spec.n = n, spec.lambda = lambda, spec.seed = seed, spec.noise = noise;
  spec.huber_delta = huber_delta;
  const double norm_a = spectral_norm(sensing);
  OracleConstants c;
  c.subgradient_bound = huber_delta * mean_row_norm(sensing);
  c.smoothness = norm_a * norm_a / static_cast<double>(measurements);
  LossOptions opts;
  opts.huber_delta = huber_delta;
  auto loss = std::make_shared<FirstOrderOracle>(LossKind::huber, std::make_shared<DenseMap>(sensing), b, opts);
  auto g = std::make_shared<NuclearTerm>(n, n, lambda);
  auto h = std::make_shared<L1Term>(lambda);
  BuiltProblem out = finish(spec, "sparselowrank", g, h, loss, c, Vector::Zero(n * n));
  out.ground_truth = flatten(truth);
  out.rows = n, out.cols = n;
  return out;
}

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  auto next_token = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("'" + path + "': truncated PGM header");
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2") throw std::runtime_error("'" + path + "': not a PGM file");
  const long cols = std::stol(next_token());
  const long rows = std::stol(next_token());
  const long maxval = std::stol(next_token());
  if (rows < 1 || cols < 1) throw std::runtime_error("'" + path + "': empty image");
  if (maxval < 1 || maxval > 255) throw std::runtime_error("'" + path + "': only 8-bit PGM is supported");
  Image img{rows, cols, Matrix(rows, cols)};
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw std::runtime_error("'" + path + "': truncated pixel data");
    for (long k = 0; k < rows * cols; ++k) img.pixels(k / cols, k % cols) = buf[static_cast<std::size_t>(k)] / static_cast<double>(maxval);
  } else {
    for (long k = 0; k < rows * cols; ++k) img.pixels(k / cols, k % cols) = std::stol(next_token()) / static_cast<double>(maxval);
  }
  return img;
}

void write_pgm(const std::string& path, const Matrix& pixels) {
  if (pixels.size() == 0) throw std::invalid_argument("write_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "P5\n" << pixels.cols() << " " << pixels.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
      const double v = std::clamp(pixels(i, j), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

Matrix synthetic_image(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("synthetic_image: empty shape");
  constexpr double pi = 3.14159265358979323846;
  Matrix img(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double u = static_cast<double>(i) / static_cast<double>(rows);
      const double v = static_cast<double>(j) / static_cast<double>(cols);
      img(i, j) = 0.5 + 0.2 * std::sin(2.0 * pi * u) * std::cos(2.0 * pi * v) + 0.1 * std::cos(pi * u);
    }
  }
  return img;
}

Matrix blocky_image(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("blocky_image: empty shape");
  RandomStream rng(seed);
  const Eigen::Index br = std::max<Eigen::Index>(1, rows / 4);
  const Eigen::Index bc = std::max<Eigen::Index>(1, cols / 4);
  Matrix levels(rows / br + 1, cols / bc + 1);
  for (Eigen::Index i = 0; i < levels.rows(); ++i) {
    for (Eigen::Index j = 0; j < levels.cols(); ++j) levels(i, j) = rng.uniform();
  }
  Matrix img(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) img(i, j) = levels(i / br, j / bc);
  }
  return img;
}

Matrix random_mask(Eigen::Index rows, Eigen::Index cols, double observed_fraction, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("random_mask: empty shape");
  RandomStream rng(seed);
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform() < observed_fraction ? 1.0 : 0.0;
  }
  return mask;
}

namespace {

/// f = 0 stand-in used when no pixel is observed.
class EmptyLoss final : public Oracle {
 public:
  explicit EmptyLoss(Eigen::Index n) : n_(n) {}
  Eigen::Index dim() const override { return n_; }
  double value(const Vector&) const override { return 0.0; }
  Vector subgradient(const Vector&) const override { return Vector::Zero(n_); }
  OracleConstants constants() const override { return {0.0, 0.0, 0.0}; }
  std::string name() const override { return "empty"; }

 private:
  Eigen::Index n_;
};

}  // namespace

BuiltProblem make_inpainting(const Matrix& image, const Matrix& mask, double noise_density, LossKind loss_kind,
                             double lambda, std::uint64_t seed) {
  if (image.size() == 0 || mask.size() == 0) throw std::invalid_argument("make_inpainting: empty image or mask");
  if (mask.rows() != image.rows() || mask.cols() != image.cols()) {
    throw std::invalid_argument("make_inpainting: mask shape does not match the image");
  }
  if (loss_kind != LossKind::l1_residual && loss_kind != LossKind::l2_norm_residual &&
      loss_kind != LossKind::least_squares) {
    throw std::invalid_argument("make_inpainting: loss must be l1_residual, l2_norm_residual or least_squares");
  }
  if (!(noise_density >= 0.0 && noise_density <= 1.0)) {
    throw std::invalid_argument("make_inpainting: noise density must lie in [0, 1]");
  }
  const Eigen::Index rows = image.rows();
  const Eigen::Index cols = image.cols();
  const double radius = lambda > 0.0 ? lambda : nuclear_norm(image);
  if (!(radius > 0.0)) throw std::invalid_argument("make_inpainting: nuclear-ball radius must be positive");

  RandomStream rng(seed);
  std::vector<Eigen::Index> observed;
  std::vector<double> values;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (mask(i, j) == 0.0) continue;
      double v = image(i, j);
      const double r = rng.uniform();
      if (r < noise_density / 2.0) {
        v = 0.0;
      } else if (r < noise_density) {
        v = 1.0;
      }
      observed.push_back(i * cols + j);
      values.push_back(v);
    }
  }

  ProblemSpec spec = default_spec("inpainting");
  spec.m = rows, spec.n = cols, spec.loss = to_string(loss_kind), spec.lambda = lambda, spec.seed = seed;
  spec.noise = noise_density;
  auto g = std::make_shared<NuclearBallIndicator>(rows, cols, radius);
  auto h = std::make_shared<BoxIndicator>(rows * cols, 0.0, 1.0);
  const Vector y0 = Vector::Zero(rows * cols);
  BuiltProblem out;
  if (observed.empty()) {
    spec.g_f = 0.0;
    out = BuiltProblem{spec, make_problem("inpainting", g, h, std::make_shared<EmptyLoss>(rows * cols), y0), nullptr,
                       {}, rows, cols};
  } else {
    OracleConstants c;
    const auto count = static_cast<double>(observed.size());
    if (loss_kind == LossKind::l1_residual) c.subgradient_bound = std::sqrt(count);
    if (loss_kind == LossKind::l2_norm_residual) c.subgradient_bound = 1.0;
    if (loss_kind == LossKind::least_squares) c.smoothness = 1.0;
    const Vector b = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    auto loss = std::make_shared<FirstOrderOracle>(
        loss_kind, std::make_shared<SelectionMap>(rows * cols, std::move(observed)), b);
    out = finish(spec, "inpainting", g, h, loss, c, y0);
    out.rows = rows, out.cols = cols;
  }
  out.ground_truth = flatten(image);
  return out;
}

Matrix box_kernel(Eigen::Index size) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("box_kernel: size must be odd and positive");
  return Matrix::Constant(size, size, 1.0 / static_cast<double>(size * size));
}

BuiltProblem make_tv_deblur(const Matrix& blurred, const Matrix& kernel, double lambda) {
  if (blurred.size() == 0) throw std::invalid_argument("make_tv_deblur: empty image");
  if (lambda < 0.0) throw std::invalid_argument("make_tv_deblur: lambda must be nonnegative");
  const Eigen::Index rows = blurred.rows();
  const Eigen::Index cols = blurred.cols();
  auto conv = std::make_shared<Convolution2d>(rows, cols, kernel);
  ProblemSpec spec = default_spec("tvdeblur");
  spec.m = rows, spec.n = cols, spec.lambda = lambda, spec.kernel_size = kernel.rows();
  OracleConstants c;
  const double l1 = kernel.cwiseAbs().sum();
  c.smoothness = l1 * l1;
  auto loss = std::make_shared<FirstOrderOracle>(LossKind::least_squares, conv, flatten(blurred));
  auto g = std::make_shared<TvTerm>(rows, cols, lambda, TvAxis::rows);
  auto h = std::make_shared<TvTerm>(rows, cols, lambda, TvAxis::cols);
  BuiltProblem out = finish(spec, "tvdeblur", g, h, loss, c, flatten(blurred));
  out.rows = rows, out.cols = cols;
  return out;
}

BuiltProblem build(const ProblemSpec& spec) {
  if (spec.name == "isotonic") return make_isotonic(spec.m, spec.n, spec.p, spec.seed, spec.noise);
  if (spec.name == "portfolio") {
    const Matrix returns = spec.dataset ? load_returns_csv(*spec.dataset) : synthetic_returns(spec.m, spec.n, spec.seed);
    BuiltProblem out = make_portfolio(returns, loss_from_string(spec.loss), spec.batch);
    out.spec.seed = spec.seed;
    out.spec.dataset = spec.dataset;
    return out;
  }
  if (spec.name == "grouplasso") {
    GroupLassoOptions o;
    o.n = spec.n, o.samples = spec.m, o.group_size = spec.group_size, o.overlap = spec.overlap;
    o.lambda = spec.lambda, o.loss = loss_from_string(spec.loss), o.seed = spec.seed;
    return make_group_lasso(o);
  }
  if (spec.name == "sparselowrank") {
    return make_sparse_lowrank(spec.n, spec.m, spec.lambda, spec.seed, spec.noise, spec.huber_delta);
  }
  if (spec.name == "inpainting") {
    const Matrix image = spec.dataset ? read_pgm(*spec.dataset).pixels : synthetic_image(spec.m, spec.n);
    const Matrix mask = random_mask(image.rows(), image.cols(), spec.observed_fraction, spec.seed);
    BuiltProblem out = make_inpainting(image, mask, spec.noise, loss_from_string(spec.loss), spec.lambda,
                                       spec.seed ^ 0x5bd1e995ULL);
    out.spec.seed = spec.seed;
    out.spec.observed_fraction = spec.observed_fraction;
    out.spec.dataset = spec.dataset;
    return out;
  }
  if (spec.name == "tvdeblur") {
    const Matrix clean = spec.dataset ? read_pgm(*spec.dataset).pixels : blocky_image(spec.m, spec.n, spec.seed);
    const Matrix kernel = box_kernel(spec.kernel_size);
    Convolution2d blur(clean.rows(), clean.cols(), kernel);
    RandomStream rng(spec.seed ^ 0x9e3779b9ULL);
    const Vector y = blur.apply(flatten(clean)) + spec.noise * draw_gaussian(rng, clean.size());
    BuiltProblem out = make_tv_deblur(unflatten(y, clean.rows(), clean.cols()), kernel, spec.lambda);
    out.spec.seed = spec.seed;
    out.spec.noise = spec.noise;
    out.spec.dataset = spec.dataset;
    out.ground_truth = flatten(clean);
    return out;
  }
  throw std::invalid_argument("unknown problem '" + spec.name + "'");
}

}  // namespace tos
