#pragma once

// JSON (de)serialization of instances and schedules.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "roster/core.hpp"

namespace roster {

using json = nlohmann::json;

template <class T>
json matrix_to_json(const Matrix<T>& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (const T& v : m.row(r)) row.push_back(v);
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix<int> int_matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string(what) + " must be an array of arrays");
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Matrix<int> m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw InvalidInput(std::string(what) + " rows must have equal length");
    for (int c = 0; c < cols; ++c) {
      if (!j[r][c].is_number_integer()) throw InvalidInput(std::string(what) + " entries must be integers");
      m(r, c) = j[r][c].get<int>();
    }
  }
  return m;
}

inline json schedule_to_json(const Schedule& s) {
  json out = json::array();
  for (int e = 0; e < s.rows(); ++e) {
    json row = json::array();
    for (Shift c : s.row(e)) row.push_back(code(c));
    out.push_back(std::move(row));
  }
  return out;
}

inline Schedule schedule_from_json(const json& j) {
  const Matrix<int> m = int_matrix_from_json(j, "schedule");
  Schedule s(m.rows(), m.cols());
  for (int e = 0; e < m.rows(); ++e)
    for (int d = 0; d < m.cols(); ++d) s(e, d) = shift_from_code(m(e, d));
  return s;
}

inline json instance_to_json(const Instance& inst) {
  json j;
  j["num_employees"] = inst.num_employees;
  j["num_days"] = inst.num_days;
  j["num_shifts"] = inst.num_shifts;
  j["hours_per_shift"] = inst.hours_per_shift;
  j["min_hours"] = inst.min_hours;
  j["max_hours"] = inst.max_hours;
  j["max_consecutive"] = inst.max_consecutive;
  j["min_rest"] = inst.min_rest;
  j["understaff_weight"] = inst.understaff_weight;
  j["overstaff_weight"] = inst.overstaff_weight;
  j["coverage"] = matrix_to_json(inst.coverage);
  j["pref_off"] = matrix_to_json(inst.pref_off);
  if (inst.reference_min_soft) j["reference_min_soft"] = *inst.reference_min_soft;
  return j;
}

inline Instance instance_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("instance must be a JSON object");
  auto get = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer())
      throw InvalidInput(std::string("instance field missing or not an integer: ") + key);
    return j[key].get<int>();
  };
  Instance inst;
  inst.num_employees = get("num_employees");
  inst.num_days = get("num_days");
  inst.num_shifts = get("num_shifts");
  inst.hours_per_shift = get("hours_per_shift");
  inst.min_hours = get("min_hours");
  inst.max_hours = get("max_hours");
  inst.max_consecutive = get("max_consecutive");
  inst.min_rest = get("min_rest");
  inst.understaff_weight = get("understaff_weight");
  inst.overstaff_weight = get("overstaff_weight");
  if (!j.contains("coverage") || !j.contains("pref_off"))
    throw InvalidInput("instance needs coverage and pref_off");
  inst.coverage = int_matrix_from_json(j["coverage"], "coverage");
  inst.pref_off = int_matrix_from_json(j["pref_off"], "pref_off");
  if (j.contains("reference_min_soft") && !j["reference_min_soft"].is_null()) {
    if (!j["reference_min_soft"].is_number_integer())
      throw InvalidInput("reference_min_soft must be an integer");
    inst.reference_min_soft = j["reference_min_soft"].get<long long>();
  }
  inst.validate();
  return inst;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

inline Instance load_instance(const std::filesystem::path& path) { return instance_from_json(read_json(path)); }

inline void save_instance(const Instance& inst, const std::filesystem::path& path) {
  write_text(path, instance_to_json(inst).dump(2) + "\n");
}

inline Schedule load_schedule(const std::filesystem::path& path) { return schedule_from_json(read_json(path)); }

inline void save_schedule(const Schedule& s, const std::filesystem::path& path) {
  write_text(path, schedule_to_json(s).dump() + "\n");
}

}  // namespace roster
