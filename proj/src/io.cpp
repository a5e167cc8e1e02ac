#include "driftguard/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace driftguard {

using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::string text;
  for (Eigen::Index j = 0; j < data.features(); ++j) text += "x" + std::to_string(j + 1) + ",";
  text += "y\n";
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features(); ++j) text += format_double(data.X(i, j)) + ",";
    text += format_double(data.y(i)) + "\n";
  }
  write_text(path, text);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || begin == end)
    throw InputError("line " + std::to_string(line_no) + ": cannot parse '" + text + "' as a number");
  return v;
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path.string() + "' is empty; a header row is required");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 2 || header.back() != "y")
    throw InputError("'" + path.string() + "': header must be x1,...,xp,y");
  for (std::size_t j = 0; j + 1 < header.size(); ++j)
    if (header[j] != "x" + std::to_string(j + 1))
      throw InputError("'" + path.string() + "': header column " + std::to_string(j + 1) + " must be x" +
                       std::to_string(j + 1));
  const std::size_t p = header.size() - 1;
  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != p + 1)
      throw InputError("'" + path.string() + "' line " + std::to_string(line_no) + ": expected " +
                       std::to_string(p + 1) + " fields");
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  Dataset d{Matrix<double>(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p)),
            Vector<double>(static_cast<Eigen::Index>(rows))};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < p; ++j)
      d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = values[r * (p + 1) + j];
    d.y(static_cast<Eigen::Index>(r)) = values[r * (p + 1) + p];
  }
  if (!d.X.allFinite() || !d.y.allFinite()) throw InputError("'" + path.string() + "' contains non-finite values");
  return d;
}

void write_monitor_csv(const std::filesystem::path& path, const std::vector<MonitorRecord>& records) {
  std::string text = "i,t2,cl,signal\n";
  for (const auto& r : records)
    text += std::to_string(r.i) + "," + format_double(r.t2) + "," + format_double(r.cl) + "," +
            (r.signal ? "1" : "0") + "\n";
  write_text(path, text);
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xf];
  }
  return out;
}

namespace {

json vec_json(const Eigen::Ref<const Vector<double>>& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json mat_json_row_major(const Matrix<double>& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

Vector<double> vec_from(const json& j, const char* name, Eigen::Index expected = -1) {
  if (!j.contains(name) || !j.at(name).is_array()) throw InputError(std::string("calibration: missing array '") + name + "'");
  const auto v = j.at(name).get<std::vector<double>>();
  if (expected >= 0 && static_cast<Eigen::Index>(v.size()) != expected)
    throw InputError(std::string("calibration: array '") + name + "' has the wrong length");
  return Eigen::Map<const Vector<double>>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix<double> mat_from(const json& j, const char* name, Eigen::Index rows, Eigen::Index cols) {
  const Vector<double> flat = vec_from(j, name, rows * cols);
  Matrix<double> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat(r * cols + c);
  return m;
}

}  // namespace

json to_json(const ScoreModel& model) {
  if (const auto* lin = std::get_if<FittedLinearModel<double>>(&model)) {
    return {{"kind", "linear"}, {"theta", vec_json(lin->theta)}, {"gamma", lin->gamma}, {"n_train", lin->n_train}};
  }
  const auto& m = std::get<FittedMLP>(model);
  return {{"kind", "mlp"},          {"features", m.feature_dim()}, {"W1", mat_json_row_major(m.W1)},
          {"b1", vec_json(m.b1)},   {"w", vec_json(m.w)},          {"b", m.b},
          {"gamma", m.gamma},       {"sigma2", m.sigma2},          {"n_train", m.n_train},
          {"converged", m.converged}, {"grad_norm", m.grad_norm}};
}

ScoreModel model_from_json(const json& j) {
  try {
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    if (kind == ModelKind::linear) {
      FittedLinearModel<double> lin;
      lin.theta = vec_from(j, "theta");
      if (lin.theta.size() < 2) throw InputError("calibration: linear theta needs at least 2 entries");
      lin.gamma = j.at("gamma").get<double>();
      lin.n_train = j.at("n_train").get<Eigen::Index>();
      return lin;
    }
    FittedMLP m;
    const auto p = j.at("features").get<Eigen::Index>();
    m.W1 = mat_from(j, "W1", kHiddenUnits, p);
    m.b1 = vec_from(j, "b1", kHiddenUnits);
    m.w = vec_from(j, "w", kHiddenUnits);
    m.b = j.at("b").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.sigma2 = j.at("sigma2").get<double>();
    m.n_train = j.at("n_train").get<Eigen::Index>();
    m.converged = j.value("converged", true);
    m.grad_norm = j.value("grad_norm", 0.0);
    if (!(m.sigma2 > 0.0)) throw InputError("calibration: sigma2 must be positive");
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("calibration: malformed model block: ") + e.what());
  }
}

json to_json(const MlpTrainConfig& c) {
  return {{"epochs", c.epochs},       {"step_size", c.step_size},         {"seed", c.seed},
          {"restarts", c.restarts},   {"refit_epochs", c.refit_epochs},   {"grad_tolerance", c.grad_tolerance}};
}

json to_json(const BootstrapConfig& c) {
  json j = {{"B_O", c.outer},         {"B_I", c.inner}, {"lambda", c.lambda}, {"alpha", c.alpha},
            {"horizon", c.horizon},   {"seed", c.seed}, {"naive", c.naive},   {"max_redraws", c.max_redraws}};
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
  return j;
}

json to_json(const OscParams& p) {
  return {{"m1", p.m1}, {"m2", p.m2}, {"k1", p.k1}, {"k2", p.k2}, {"k3", p.k3}, {"c1", p.c1}, {"c2", p.c2}};
}

json to_json(const OscState& s) { return {{"p1", s.p1}, {"v1", s.v1}, {"p2", s.p2}, {"v2", s.v2}, {"t", s.t}}; }

json calibration_to_json(const Calibration& cal) {
  json j;
  j["version"] = kCalibrationVersion;
  j["model_kind"] = to_string(kind_of(cal.model));
  j["model"] = to_json(cal.model);
  j["gamma"] = cal.spec.gamma;
  j["train"] = to_json(cal.spec.train);
  j["epsilon"] = cal.moments.epsilon;
  j["lambda"] = cal.config.lambda;
  j["alpha"] = cal.config.alpha;
  j["horizon"] = cal.config.horizon;
  j["seed"] = cal.config.seed;
  j["B_O"] = cal.config.outer;
  j["B_I"] = cal.config.inner;
  j["naive"] = cal.config.naive;
  j["n_train"] = cal.n_train;
  j["dim"] = cal.moments.dim();
  j["mean"] = vec_json(cal.moments.mean);
  j["cov"] = mat_json_row_major(cal.moments.cov);
  j["cl"] = cal.cl;
  j["k"] = cal.k;
  j["warnings"] = cal.warnings;
  return j;
}

Calibration calibration_from_json(const json& j) {
  if (!j.is_object() || !j.contains("version")) throw InputError("calibration: missing version field");
  if (j.at("version") != kCalibrationVersion)
    throw InputError("calibration: unknown artifact version '" + j.at("version").dump() + "' (expected " +
                     kCalibrationVersion + ")");
  try {
    Calibration cal;
    cal.model = model_from_json(j.at("model"));
    cal.spec.kind = kind_of(cal.model);
    cal.spec.gamma = j.at("gamma").get<double>();
    if (j.contains("train")) {
      const auto& t = j.at("train");
      cal.spec.train.epochs = t.value("epochs", cal.spec.train.epochs);
      cal.spec.train.step_size = t.value("step_size", cal.spec.train.step_size);
      cal.spec.train.seed = t.value("seed", cal.spec.train.seed);
      cal.spec.train.restarts = t.value("restarts", cal.spec.train.restarts);
      cal.spec.train.refit_epochs = t.value("refit_epochs", cal.spec.train.refit_epochs);
      cal.spec.train.grad_tolerance = t.value("grad_tolerance", cal.spec.train.grad_tolerance);
    }
    cal.config.lambda = j.at("lambda").get<double>();
    cal.config.alpha = j.at("alpha").get<double>();
    cal.config.horizon = j.at("horizon").get<Eigen::Index>();
    cal.config.seed = j.at("seed").get<std::uint64_t>();
    cal.config.outer = j.value("B_O", cal.config.outer);
    cal.config.inner = j.value("B_I", cal.config.inner);
    cal.config.naive = j.value("naive", false);
    const double epsilon = j.at("epsilon").get<double>();
    cal.config.epsilon = epsilon;
    cal.n_train = j.value("n_train", Eigen::Index{0});
    const auto d = j.at("dim").get<Eigen::Index>();
    if (d != score_dim(cal.model)) throw InputError("calibration: dim does not match the model's score dimension");
    cal.moments = moments_from<double>(vec_from(j, "mean", d), mat_from(j, "cov", d, d), epsilon);
    cal.cl = j.at("cl").get<std::vector<double>>();
    cal.k = j.at("k").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(cal.cl.size()) != cal.config.horizon || cal.k.size() != cal.cl.size())
      throw InputError("calibration: cl and k must have horizon entries");
    if (j.contains("warnings")) cal.warnings = j.at("warnings").get<std::vector<std::string>>();
    return cal;
  } catch (const json::exception& e) {
    throw InputError(std::string("calibration: malformed artifact: ") + e.what());
  }
}

}  // namespace driftguard
