#include "whft/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace whft::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ModelError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

Tick as_tick(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    fail(where, "expected a non-negative integer");
  }
  return v.get<Tick>();
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

Matrix as_matrix(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected a row-major nested array");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string at = where + "[" + std::to_string(r) + "]";
    if (!v[r].is_array()) fail(at, "expected an array row");
    std::vector<double> row;
    for (std::size_t c = 0; c < v[r].size(); ++c) {
      row.push_back(as_double(v[r][c], at + "[" + std::to_string(c) + "]"));
    }
    if (!rows.empty() && row.size() != rows.front().size()) fail(at, "ragged matrix row");
    rows.push_back(std::move(row));
  }
  return rows.empty() ? Matrix() : Matrix::from_rows(rows);
}

json matrix_json(const Matrix& m) { return m.empty() ? json::array() : json(m.to_rows()); }

std::size_t line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

}  // namespace

Model parse_model_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(source + ":" + std::to_string(line_of(text, e.byte)) +
                     ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) fail(source, "top level must be an object");

  Model model;
  TaskSet& ts = model.design.taskset;

  if (auto it = doc.find("platform"); it != doc.end()) {
    const std::string where = source + ": platform.cpus";
    const json& cpus = require(*it, "cpus", source + ": platform");
    ts.platform.cpus.clear();
    if (cpus.is_number_integer()) {
      const Tick count = as_tick(cpus, where);
      for (Tick c = 0; c < count; ++c) ts.platform.cpus.push_back("cpu" + std::to_string(c));
    } else if (cpus.is_array()) {
      for (std::size_t c = 0; c < cpus.size(); ++c) {
        ts.platform.cpus.push_back(as_string(cpus[c], where + "[" + std::to_string(c) + "]"));
      }
    } else {
      fail(where, "expected a CPU count or a list of names");
    }
  }
  if (auto it = doc.find("fault_model"); it != doc.end()) {
    const std::string where = source + ": fault_model";
    if (auto d = it->find("min_error_distance"); d != it->end() && !d->is_null()) {
      ts.fault.min_error_distance = as_tick(*d, where + ".min_error_distance");
    }
    if (auto k = it->find("errors_per_hyperperiod"); k != it->end()) {
      ts.fault.errors_per_hyperperiod =
          static_cast<std::uint32_t>(as_tick(*k, where + ".errors_per_hyperperiod"));
    }
  }
  if (auto it = doc.find("tick_seconds"); it != doc.end()) {
    model.design.tick_seconds = as_double(*it, source + ": tick_seconds");
  }

  const json empty = json::array();
  const json& tasks = doc.contains("tasks") ? doc["tasks"] : empty;
  if (!tasks.is_array()) fail(source + ": tasks", "expected an array");
  std::vector<std::optional<std::size_t>> cpu_of;
  std::vector<std::optional<int>> prio_of;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const json& jt = tasks[i];
    std::string where = source + ": tasks[" + std::to_string(i) + "]";
    if (!jt.is_object()) fail(where, "expected an object");
    Task t;
    t.id = as_string(require(jt, "id", where), where + ".id");
    where += " ('" + t.id + "')";
    t.period = as_tick(require(jt, "period", where), where + ".period");
    t.deadline = jt.contains("deadline") ? as_tick(jt["deadline"], where + ".deadline") : t.period;
    t.wcet = as_tick(require(jt, "wcet", where), where + ".wcet");
    if (jt.contains("lambda")) t.comparison_overhead = as_tick(jt["lambda"], where + ".lambda");
    if (jt.contains("delta_c")) t.eed_overhead = as_tick(jt["delta_c"], where + ".delta_c");
    if (jt.contains("detection")) {
      try {
        t.detection = parse_detection(as_string(jt["detection"], where + ".detection"));
      } catch (const ModelError& e) {
        fail(where + ".detection", e.what());
      }
    }
    if (jt.contains("constraints")) {
      const json& cs = jt["constraints"];
      if (!cs.is_array()) fail(where + ".constraints", "expected an array of [k, N] pairs");
      t.constraints.clear();
      for (std::size_t c = 0; c < cs.size(); ++c) {
        const std::string at = where + ".constraints[" + std::to_string(c) + "]";
        if (!cs[c].is_array() || cs[c].size() != 2) fail(at, "expected [k, N]");
        t.constraints.push_back({static_cast<std::uint32_t>(as_tick(cs[c][0], at + "[0]")),
                                 static_cast<std::uint32_t>(as_tick(cs[c][1], at + "[1]"))});
      }
    }
    if (auto c = jt.find("control"); c != jt.end() && !c->is_null()) {
      ControlBinding b;
      b.plant = as_string(require(*c, "plant", where + ".control"), where + ".control.plant");
      if (c->contains("weight")) b.weight = as_double((*c)["weight"], where + ".control.weight");
      if (c->contains("j_des")) b.desired_cost = as_double((*c)["j_des"], where + ".control.j_des");
      t.control = b;
    }
    std::optional<std::size_t> cpu;
    if (auto c = jt.find("cpu"); c != jt.end()) {
      if (c->is_string()) {
        const auto& names = ts.platform.cpus;
        auto pos = std::find(names.begin(), names.end(), c->get<std::string>());
        if (pos == names.end()) fail(where + ".cpu", "unknown CPU '" + c->get<std::string>() + "'");
        cpu = static_cast<std::size_t>(pos - names.begin());
      } else {
        cpu = as_tick(*c, where + ".cpu");
      }
    }
    std::optional<int> prio;
    if (auto p = jt.find("priority"); p != jt.end()) {
      if (!p->is_number_integer()) fail(where + ".priority", "expected an integer");
      prio = p->get<int>();
    }
    cpu_of.push_back(cpu);
    prio_of.push_back(prio);
    ts.tasks.push_back(std::move(t));
  }

  const json& plants = doc.contains("plants") ? doc["plants"] : empty;
  if (!plants.is_array()) fail(source + ": plants", "expected an array");
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const json& jp = plants[i];
    std::string where = source + ": plants[" + std::to_string(i) + "]";
    if (!jp.is_object()) fail(where, "expected an object");
    control::LtiPlant p;
    p.id = as_string(require(jp, "id", where), where + ".id");
    where += " ('" + p.id + "')";
    p.a = as_matrix(require(jp, "A", where), where + ".A");
    p.b = as_matrix(require(jp, "B", where), where + ".B");
    if (jp.contains("C")) p.c_out = as_matrix(jp["C"], where + ".C");
    p.sampling_period = as_double(require(jp, "h", where), where + ".h");
    p.let_deadline = jp.contains("D") ? as_double(jp["D"], where + ".D") : p.sampling_period;
    p.gain = as_matrix(require(jp, "K", where), where + ".K");
    if (jp.contains("j_th")) p.cost_threshold = as_double(jp["j_th"], where + ".j_th");
    if (jp.contains("h_max")) {
      p.horizon_cap = static_cast<std::uint32_t>(as_tick(jp["h_max"], where + ".h_max"));
    }
    try {
      control::validate(p);
    } catch (const control::ControlError& e) {
      fail(source, e.what());
    }
    model.design.plants.push_back(std::move(p));
  }

  try {
    explore::validate(model.design);
  } catch (const ModelError& e) {
    fail(source, e.what());
  }

  const bool any_prio = std::any_of(prio_of.begin(), prio_of.end(), [](auto& p) { return p.has_value(); });
  if (any_prio) {
    SystemConfig cfg;
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
      if (!prio_of[i]) fail(source, "task '" + ts.tasks[i].id + "' lacks a priority");
      cfg.cpu.push_back(cpu_of[i].value_or(0));
      cfg.priority.push_back(*prio_of[i]);
      cfg.detection.push_back(ts.tasks[i].detection);
    }
    try {
      validate(ts, cfg);
    } catch (const ModelError& e) {
      fail(source, e.what());
    }
    model.config = std::move(cfg);
  }
  return model;
}

Model parse_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_text(buf.str(), path.string());
}

std::string emit_model(const Model& model) {
  const TaskSet& ts = model.design.taskset;
  json doc;
  doc["platform"] = {{"cpus", ts.platform.cpus}};
  json fault = {{"errors_per_hyperperiod", ts.fault.errors_per_hyperperiod}};
  if (ts.fault.min_error_distance) fault["min_error_distance"] = *ts.fault.min_error_distance;
  doc["fault_model"] = fault;
  doc["tick_seconds"] = model.design.tick_seconds;

  doc["tasks"] = json::array();
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    const Task& t = ts.tasks[i];
    json jt = {{"id", t.id},
               {"period", t.period},
               {"deadline", t.deadline},
               {"wcet", t.wcet},
               {"lambda", t.comparison_overhead},
               {"delta_c", t.eed_overhead},
               {"detection", std::string(to_string(t.detection))}};
    json cs = json::array();
    for (const auto& c : t.constraints) cs.push_back({c.misses, c.window});
    jt["constraints"] = cs;
    if (t.control) {
      jt["control"] = {{"plant", t.control->plant},
                       {"weight", t.control->weight},
                       {"j_des", t.control->desired_cost}};
    }
    if (model.config) {
      jt["cpu"] = ts.platform.cpus.at(model.config->cpu[i]);
      jt["priority"] = model.config->priority[i];
    }
    doc["tasks"].push_back(std::move(jt));
  }

  doc["plants"] = json::array();
  for (const auto& p : model.design.plants) {
    doc["plants"].push_back({{"id", p.id},
                             {"A", matrix_json(p.a)},
                             {"B", matrix_json(p.b)},
                             {"C", matrix_json(p.c_out)},
                             {"h", p.sampling_period},
                             {"D", p.let_deadline},
                             {"K", matrix_json(p.gain)},
                             {"j_th", p.cost_threshold},
                             {"h_max", p.horizon_cap}});
  }
  return doc.dump(2) + "\n";
}

void write_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write '" + path.string() + "'");
  out << emit_model(model);
}

SystemConfig config_or_default(const Model& model) {
  if (model.config) return *model.config;
  const auto& tasks = model.design.taskset.tasks;
  std::vector<Detection> det;
  for (const auto& t : tasks) det.push_back(t.detection);
  return explore::first_fit_decreasing(model.design.taskset, det);
}

}  // namespace whft::io
