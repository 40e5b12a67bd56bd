#include "koopman/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace koopman {

namespace {

constexpr int kFormatVersion = 1;
using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& mat) {
  json data = json::array();
  for (int r = 0; r < mat.rows(); ++r)
    for (int c = 0; c < mat.cols(); ++c) data.push_back(format_double(mat(r, c)));
  return json{{"shape", {mat.rows(), mat.cols()}}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j, int expect_rows, int expect_cols,
                                 const std::string& what) {
  const auto& shape = j.at("shape");
  int rows = shape.at(0).get<int>(), cols = shape.at(1).get<int>();
  if ((expect_rows >= 0 && rows != expect_rows) || (expect_cols >= 0 && cols != expect_cols))
    throw ModelFileError("model file: " + what + " has shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", expected " + std::to_string(expect_rows) + "x" +
                         std::to_string(expect_cols));
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols)
    throw ModelFileError("model file: " + what + " data length mismatch");
  Eigen::MatrixXd mat(rows, cols);
  std::size_t idx = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) mat(r, c) = parse_double(data.at(idx++).get<std::string>());
  return mat;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(format_double(v[i]));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = parse_double(j.at(static_cast<std::size_t>(i)).get<std::string>());
  return v;
}

json box_to_json(const Box& box) {
  return json{{"lo", vector_to_json(box.lo)}, {"hi", vector_to_json(box.hi)}};
}

Box box_from_json(const json& j) {
  return Box(vector_from_json(j.at("lo")), vector_from_json(j.at("hi")));
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

std::string fnv1a_hex(const std::string& payload) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : payload) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const KoopmanModel& model, const CovarianceSurrogate* Q, const std::string& path,
                const std::string& param_sampling) {
  json dict_j;
  dict_j["dim"] = model.dict.dim();
  dict_j["max_degree"] = model.dict.max_degree();
  dict_j["excluded"] = model.dict.excluded();
  dict_j["basis"] = model.dict.basis();

  json j;
  j["format_version"] = kFormatVersion;
  j["dictionary"] = dict_j;
  j["t"] = format_double(model.t);
  j["m"] = model.m;
  j["domains"] = json{{"state", box_to_json(model.state_domain)},
                      {"param", box_to_json(model.param_domain)}};
  j["feature_scale"] = vector_to_json(model.feature_scale);
  j["param_sampling"] = param_sampling;
  json blocks = json::array();
  for (const auto& b : model.blocks) blocks.push_back(matrix_to_json(b));
  j["blocks"] = blocks;
  if (Q) {
    json qblocks = json::array();
    for (const auto& b : Q->blocks) qblocks.push_back(matrix_to_json(b));
    j["covariance"] = json{{"m", Q->m}, {"M", Q->M}, {"blocks", qblocks}};
  }
  const std::string payload = j.dump(2);
  j["checksum"] = fnv1a_hex(payload);
  write_file_atomic(path, j.dump(2) + "\n");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFileError("cannot open model file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelFileError(std::string("malformed model file: ") + e.what());
  }

  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
    throw ModelFileError("model file: unsupported format_version");
  if (!j.contains("checksum")) throw ModelFileError("model file: missing checksum");
  const std::string stored = j.at("checksum").get<std::string>();
  json payload_j = j;
  payload_j.erase("checksum");
  if (fnv1a_hex(payload_j.dump(2)) != stored)
    throw ModelFileError("model file: checksum mismatch");

  const auto& dict_j = j.at("dictionary");
  Dictionary dict = Dictionary::from_basis(
      dict_j.at("dim").get<int>(), dict_j.at("max_degree").get<int>(),
      dict_j.at("excluded").get<std::vector<MultiIndex>>(),
      dict_j.at("basis").get<std::vector<MultiIndex>>());
  const int M = dict.size();

  LoadedModel out;
  out.model.dict = dict;
  out.model.t = parse_double(j.at("t").get<std::string>());
  out.model.m = j.at("m").get<int>();
  out.model.state_domain = box_from_json(j.at("domains").at("state"));
  out.model.param_domain = box_from_json(j.at("domains").at("param"));
  out.model.feature_scale = vector_from_json(j.at("feature_scale"));
  out.param_sampling = j.value("param_sampling", "uniform");

  const auto& blocks = j.at("blocks");
  if (static_cast<int>(blocks.size()) != out.model.m + 1)
    throw ModelFileError("model file: expected " + std::to_string(out.model.m + 1) +
                         " blocks, found " + std::to_string(blocks.size()));
  for (const auto& b : blocks)
    out.model.blocks.push_back(matrix_from_json(b, M, M, "Koopman block"));

  if (j.contains("covariance")) {
    CovarianceSurrogate Q;
    const auto& cov = j.at("covariance");
    Q.m = cov.at("m").get<int>();
    Q.M = cov.at("M").get<int>();
    if (Q.m != out.model.m || Q.M != M)
      throw ModelFileError("model file: covariance dimensions inconsistent with model");
    for (const auto& b : cov.at("blocks"))
      Q.blocks.push_back(matrix_from_json(b, M, M, "covariance block"));
    if (static_cast<int>(Q.blocks.size()) != (Q.m + 1) * (Q.m + 1))
      throw ModelFileError("model file: wrong number of covariance blocks");
    out.covariance = std::move(Q);
  }
  return out;
}

}  // namespace koopman
