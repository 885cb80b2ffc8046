#include "relustab/io/system_json.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <fstream>
#include <sstream>

namespace relustab {

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw InputError(name + ": expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw InputError(name + ": rows must be arrays");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw InputError(name + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw InputError(name + ": non-numeric entry");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw InputError(name + ": expected a nonempty array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(name + ": non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ReluSystem system_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("system: expected an object");
  for (const char* key : {"A", "B", "C", "D"})
    if (!j.contains(key)) throw InputError(std::string("system: missing key ") + key);
  return ReluSystem(matrix_from_json(j["A"], "A"), matrix_from_json(j["B"], "B"),
                    matrix_from_json(j["C"], "C"), matrix_from_json(j["D"], "D"));
}

ReluSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return system_from_json(j);
}

Json system_to_json(const ReluSystem& sys) {
  Json j;
  j["A"] = to_json(sys.A());
  j["B"] = to_json(sys.B());
  j["C"] = to_json(sys.C());
  j["D"] = to_json(sys.D());
  return j;
}

Json witness_to_json(const RayWitness& w) {
  Json j;
  j["x"] = to_json(w.x);
  j["w"] = to_json(w.w);
  j["lambda"] = w.lambda;
  return j;
}

Json report_to_json(const ValidationReport& r) {
  Json j;
  j["residual_eig"] = r.residual_eig;
  j["min_sign"] = r.min_sign;
  j["max_compl"] = r.max_compl;
  j["lambda"] = r.lambda;
  j["pass"] = r.pass;
  return j;
}

namespace {

void write(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        write(it.value(), out, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      const bool scalar = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (j.empty()) {
        out += "[]";
      } else if (scalar) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write(j[i], out, indent, depth + 1);
        }
        out += "]";
      } else {
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ",\n";
          out += pad;
          write(j[i], out, indent, depth + 1);
        }
        out += "\n" + close + "]";
      }
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s = buf;
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  write(j, out, 2, 0);
  out += '\n';
  return out;
}

}  // namespace relustab
