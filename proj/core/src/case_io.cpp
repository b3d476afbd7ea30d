#include "gridse/case_io.hpp"

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "gridse/evaluation.hpp"

namespace gridse {

namespace {

using nlohmann::json;

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view token, int line) {
    std::string t(token);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || t.empty())
        throw ParseError(line, "not a number: '" + t + "'");
    return v;
}

int parse_int(double v, int line, const char* what) {
    double r = std::nearbyint(v);
    if (!std::isfinite(v) || std::abs(v - r) > 1e-9 || std::abs(r) > 2e9)
        throw ParseError(line, std::string(what) + " must be an integer");
    return static_cast<int>(r);
}

struct RawRow {
    std::vector<double> values;
    int line = 0;
};

using RawTable = std::vector<RawRow>;

/// Splits one physical line of matrix body into rows; ';' and the line end
/// both terminate a row.
void append_rows(std::string_view content, int line, RawTable& table) {
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t semi = content.find(';', pos);
        std::string_view chunk = content.substr(pos, semi == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : semi - pos);
        chunk = trim(chunk);
        if (!chunk.empty()) {
            RawRow row;
            row.line = line;
            std::istringstream is{std::string(chunk)};
            std::string tok;
            while (is >> tok) row.values.push_back(parse_number(tok, line));
            table.push_back(std::move(row));
        }
        if (semi == std::string_view::npos) break;
        pos = semi + 1;
    }
}

}  // namespace

GridCase parse_case(std::string_view text) {
    GridCase c;
    bool have_base = false;
    std::unordered_map<std::string, RawTable> tables;

    enum class State { top, matrix, skip };
    State state = State::top;
    RawTable* current = nullptr;  // matrix state
    char skip_close = ']';       // skip state

    int line = 0;
    int table_line = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line;

        if (std::size_t cmt = raw.find('%'); cmt != std::string_view::npos)
            raw = raw.substr(0, cmt);
        std::string_view s = trim(raw);

        if (state == State::skip) {
            if (s.find(skip_close) != std::string_view::npos) state = State::top;
            continue;
        }
        if (state == State::matrix) {
            std::size_t close = s.find(']');
            std::string_view body = (close == std::string_view::npos) ? s : s.substr(0, close);
            append_rows(body, line, *current);
            if (close != std::string_view::npos) {
                std::string_view rest = trim(s.substr(close + 1));
                if (!rest.empty() && rest != ";")
                    throw ParseError(line, "unexpected text after closing ']'");
                state = State::top;
                current = nullptr;
            }
            continue;
        }

        if (s.empty()) continue;
        if (s.substr(0, 8) == "function") {
            std::size_t eq = s.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(line, "malformed function line");
            std::string_view name = trim(s.substr(eq + 1));
            if (name.empty()) throw ParseError(line, "missing case name");
            c.name = std::string(name);
            continue;
        }
        if (s.substr(0, 4) == "mpc.") {
            std::size_t eq = s.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(line, "expected '=' in assignment");
            std::string field{trim(s.substr(4, eq - 4))};
            // Indexed assignments (mpc.bus(1,2) = ...) would silently change
            // table contents; refuse rather than drop them.
            for (char ch : field)
                if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_')
                    throw ParseError(line, "unsupported assignment to 'mpc." + field + "'");
            std::string_view rest = trim(s.substr(eq + 1));
            if (field == "baseMVA") {
                if (have_base) throw ParseError(line, "duplicate baseMVA");
                if (!rest.empty() && rest.back() == ';') rest = trim(rest.substr(0, rest.size() - 1));
                c.base_mva = parse_number(rest, line);
                have_base = true;
                continue;
            }
            bool wanted = field == "bus" || field == "gen" || field == "branch";
            if (!rest.empty() && rest.front() == '[') {
                if (!wanted) {
                    if (rest.find(']') == std::string_view::npos) {
                        state = State::skip;
                        skip_close = ']';
                    }
                    continue;
                }
                if (tables.count(field)) throw ParseError(line, "duplicate table '" + field + "'");
                current = &tables[field];
                table_line = line;
                std::size_t close = rest.find(']');
                std::string_view body =
                    rest.substr(1, close == std::string_view::npos ? std::string_view::npos
                                                                   : close - 1);
                append_rows(body, line, *current);
                if (close == std::string_view::npos) {
                    state = State::matrix;
                } else {
                    std::string_view tail = trim(rest.substr(close + 1));
                    if (!tail.empty() && tail != ";")
                        throw ParseError(line, "unexpected text after closing ']'");
                    current = nullptr;
                }
                continue;
            }
            if (!rest.empty() && rest.front() == '{') {
                if (rest.find('}') == std::string_view::npos) {
                    state = State::skip;
                    skip_close = '}';
                }
                continue;
            }
            continue;  // scalar or string assignment to an ignored field
        }
        throw ParseError(line, "unrecognized statement '" + std::string(s.substr(0, 32)) + "'");
    }
    if (state != State::top) throw ParseError(table_line, "unterminated table");
    if (!have_base) throw ParseError(line, "missing baseMVA");
    for (const char* required : {"bus", "gen", "branch"})
        if (!tables.count(required))
            throw ParseError(line, std::string("missing table '") + required + "'");
    if (!(c.base_mva > 0.0))
        throw ValidationError("baseMVA must be positive, got " + fmt17(c.base_mva));
    double base = c.base_mva;

    for (const RawRow& row : tables["bus"]) {
        if (row.values.size() < 9)
            throw ParseError(row.line, "bus row needs at least 9 columns, got " +
                                           std::to_string(row.values.size()));
        Bus b;
        b.id = parse_int(row.values[0], row.line, "bus id");
        int type = parse_int(row.values[1], row.line, "bus type");
        switch (type) {
            case 1: b.kind = BusKind::pq; break;
            case 2: b.kind = BusKind::pv; break;
            case 3: b.kind = BusKind::slack; break;
            default:
                throw ParseError(row.line, "unsupported bus type " + std::to_string(type));
        }
        b.pd = row.values[2] / base;
        b.qd = row.values[3] / base;
        b.gs = row.values[4] / base;
        b.bs = row.values[5] / base;
        b.vm_init = row.values[7];
        b.va_init = row.values[8] / kDegPerRad;
        c.buses.push_back(b);
    }

    std::unordered_map<int, std::size_t> gen_at;
    for (const RawRow& row : tables["gen"]) {
        if (row.values.size() < 8)
            throw ParseError(row.line, "gen row needs at least 8 columns, got " +
                                           std::to_string(row.values.size()));
        if (parse_int(row.values[7], row.line, "gen status") <= 0) continue;
        Gen g;
        g.bus = parse_int(row.values[0], row.line, "gen bus");
        g.pg = row.values[1] / base;
        g.qg = row.values[2] / base;
        g.vset = row.values[5];
        auto it = gen_at.find(g.bus);
        if (it == gen_at.end()) {
            gen_at.emplace(g.bus, c.gens.size());
            c.gens.push_back(g);
        } else {
            // Co-located units collapse into one equivalent machine.
            c.gens[it->second].pg += g.pg;
            c.gens[it->second].qg += g.qg;
        }
    }

    for (const RawRow& row : tables["branch"]) {
        if (row.values.size() < 5)
            throw ParseError(row.line, "branch row needs at least 5 columns, got " +
                                           std::to_string(row.values.size()));
        Branch br;
        br.from = parse_int(row.values[0], row.line, "branch from-bus");
        br.to = parse_int(row.values[1], row.line, "branch to-bus");
        br.r = row.values[2];
        br.x = row.values[3];
        br.b_chg = row.values[4];
        if (row.values.size() > 8 && row.values[8] != 0.0) br.tap = row.values[8];
        if (row.values.size() > 9) br.shift = row.values[9] / kDegPerRad;
        if (row.values.size() > 10)
            br.in_service = parse_int(row.values[10], row.line, "branch status") > 0;
        c.branches.push_back(br);
    }

    validate(c);
    return c;
}

std::string serialize_case(const GridCase& c) {
    std::string name = c.name.empty() ? std::string("case") : c.name;
    for (char& ch : name)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') ch = '_';

    std::ostringstream os;
    double base = c.base_mva;
    os << "function mpc = " << name << "\n";
    os << "mpc.version = '2';\n";
    os << "mpc.baseMVA = " << fmt17(base) << ";\n\n";

    os << "%% bus_i type Pd Qd Gs Bs area Vm Va\n";
    os << "mpc.bus = [\n";
    for (const Bus& b : c.buses) {
        int type = b.kind == BusKind::slack ? 3 : (b.kind == BusKind::pv ? 2 : 1);
        os << '\t' << b.id << '\t' << type << '\t' << fmt17(b.pd * base) << '\t'
           << fmt17(b.qd * base) << '\t' << fmt17(b.gs * base) << '\t' << fmt17(b.bs * base)
           << "\t1\t" << fmt17(b.vm_init) << '\t' << fmt17(b.va_init * kDegPerRad) << ";\n";
    }
    os << "];\n\n";

    os << "%% bus Pg Qg Qmax Qmin Vg mBase status\n";
    os << "mpc.gen = [\n";
    for (const Gen& g : c.gens)
        os << '\t' << g.bus << '\t' << fmt17(g.pg * base) << '\t' << fmt17(g.qg * base)
           << "\t0\t0\t" << fmt17(g.vset) << '\t' << fmt17(base) << "\t1;\n";
    os << "];\n\n";

    os << "%% fbus tbus r x b rateA rateB rateC ratio angle status\n";
    os << "mpc.branch = [\n";
    for (const Branch& br : c.branches)
        os << '\t' << br.from << '\t' << br.to << '\t' << fmt17(br.r) << '\t' << fmt17(br.x)
           << '\t' << fmt17(br.b_chg) << "\t0\t0\t0\t" << fmt17(br.tap) << '\t'
           << fmt17(br.shift * kDegPerRad) << '\t' << (br.in_service ? 1 : 0) << ";\n";
    os << "];\n";
    return os.str();
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("read failure on " + path.string());
    return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) throw IoError("write failure on " + path.string());
}

}  // namespace

GridCase load_case(const std::filesystem::path& path) {
    return parse_case(read_file(path));
}

void save_case(const GridCase& c, const std::filesystem::path& path) {
    write_file(path, serialize_case(c));
}

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& reason) {
    throw SchemaError(path, reason);
}

const json& require_key(const json& obj, const std::string& where, const char* key) {
    if (!obj.is_object()) schema_fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_fail(where + "/" + key, "missing required key");
    return *it;
}

double require_number(const json& obj, const std::string& where, const char* key) {
    const json& v = require_key(obj, where, key);
    if (!v.is_number()) schema_fail(where + "/" + key, "expected a number");
    return v.get<double>();
}

bool require_bool(const json& obj, const std::string& where, const char* key) {
    const json& v = require_key(obj, where, key);
    if (!v.is_boolean()) schema_fail(where + "/" + key, "expected a boolean");
    return v.get<bool>();
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) schema_fail(where + "/" + it.key(), "unknown key");
    }
}

Vec number_array(const json& v, const std::string& where) {
    if (!v.is_array()) schema_fail(where, "expected an array");
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            schema_fail(where + "/" + std::to_string(i), "expected a number");
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
}

SeCase se_from_json(const json& j, GridCase grid) {
    if (!j.is_object()) schema_fail("", "top level must be an object");
    reject_unknown(j, "", {"case_name", "seed", "truth", "devices"});

    SeCase se;
    se.grid = std::move(grid);
    const json& name = require_key(j, "", "case_name");
    if (!name.is_string()) schema_fail("/case_name", "expected a string");
    se.case_name = name.get<std::string>();

    const json& seed = require_key(j, "", "seed");
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                      seed.get<std::int64_t>() < 0))
        schema_fail("/seed", "expected a nonnegative integer");
    se.seed = seed.get<std::uint64_t>();

    const int n = se.grid.size();
    const json& devices = require_key(j, "", "devices");
    if (!devices.is_array()) schema_fail("/devices", "expected an array");
    BusIndex index = make_bus_index(se.grid);
    std::vector<int> seen(static_cast<std::size_t>(n), 0);

    std::vector<Device> parsed;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        std::string where = "/devices/" + std::to_string(i);
        const json& d = devices[i];
        if (!d.is_object()) schema_fail(where, "expected an object");
        const json& busj = require_key(d, where, "bus");
        if (!busj.is_number_integer()) schema_fail(where + "/bus", "expected an integer");
        Device dev;
        dev.bus = busj.get<int>();
        auto found = index.find(dev.bus);
        if (found == index.end())
            schema_fail(where + "/bus", "bus " + std::to_string(dev.bus) + " is not in the grid");
        if (seen[static_cast<std::size_t>(found->second)]++)
            schema_fail(where + "/bus", "second device at bus " + std::to_string(dev.bus));

        const json& kind = require_key(d, where, "kind");
        if (!kind.is_string()) schema_fail(where + "/kind", "expected a string");
        std::string k = kind.get<std::string>();
        if (k == "pmu") {
            reject_unknown(d, where, {"bus", "kind", "pmu"});
            const json& p = require_key(d, where, "pmu");
            std::string pw = where + "/pmu";
            reject_unknown(p, pw, {"g_pmu", "vr", "vi", "ir", "ii", "sigma_rel", "perfect"});
            PmuDevice pmu;
            pmu.g_pmu = require_number(p, pw, "g_pmu");
            pmu.vr = require_number(p, pw, "vr");
            pmu.vi = require_number(p, pw, "vi");
            pmu.ir = require_number(p, pw, "ir");
            pmu.ii = require_number(p, pw, "ii");
            pmu.sigma_rel = require_number(p, pw, "sigma_rel");
            pmu.perfect = require_bool(p, pw, "perfect");
            if (!(pmu.g_pmu > 0.0)) schema_fail(pw + "/g_pmu", "must be positive");
            if (pmu.sigma_rel < 0.0) schema_fail(pw + "/sigma_rel", "must be nonnegative");
            if (pmu.perfect && pmu.sigma_rel != 0.0)
                schema_fail(pw + "/sigma_rel", "perfect device must have sigma_rel 0");
            dev.model = pmu;
        } else if (k == "rtu") {
            reject_unknown(d, where, {"bus", "kind", "rtu"});
            const json& r = require_key(d, where, "rtu");
            std::string rw = where + "/rtu";
            reject_unknown(r, rw,
                           {"vm", "p", "q", "sigma_vm_rel", "sigma_p_rel", "sigma_q_rel", "gamma"});
            RtuDevice rtu;
            rtu.vm = require_number(r, rw, "vm");
            rtu.p = require_number(r, rw, "p");
            rtu.q = require_number(r, rw, "q");
            rtu.sigma_vm_rel = require_number(r, rw, "sigma_vm_rel");
            rtu.sigma_p_rel = require_number(r, rw, "sigma_p_rel");
            rtu.sigma_q_rel = require_number(r, rw, "sigma_q_rel");
            rtu.gamma = require_number(r, rw, "gamma");
            if (!(rtu.vm > 0.0)) schema_fail(rw + "/vm", "must be positive");
            if (!(rtu.gamma > 0.0)) schema_fail(rw + "/gamma", "must be positive");
            if (rtu.sigma_vm_rel < 0.0) schema_fail(rw + "/sigma_vm_rel", "must be nonnegative");
            if (rtu.sigma_p_rel < 0.0) schema_fail(rw + "/sigma_p_rel", "must be nonnegative");
            if (rtu.sigma_q_rel < 0.0) schema_fail(rw + "/sigma_q_rel", "must be nonnegative");
            dev.model = rtu;
        } else {
            schema_fail(where + "/kind", "expected \"pmu\" or \"rtu\"");
        }
        parsed.push_back(std::move(dev));
    }
    for (int i = 0; i < n; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            schema_fail("/devices",
                        "no device at bus " + std::to_string(se.grid.buses[i].id));

    // Store devices in bus order regardless of their order in the file.
    se.devices.resize(static_cast<std::size_t>(n));
    for (Device& dev : parsed)
        se.devices[static_cast<std::size_t>(index.at(dev.bus))] = std::move(dev);

    if (auto it = j.find("truth"); it != j.end()) {
        if (!it->is_object()) schema_fail("/truth", "expected an object");
        reject_unknown(*it, "/truth", {"vr", "vi"});
        TruthState t;
        t.vr = number_array(require_key(*it, "/truth", "vr"), "/truth/vr");
        t.vi = number_array(require_key(*it, "/truth", "vi"), "/truth/vi");
        if (t.vr.size() != n || t.vi.size() != n)
            schema_fail("/truth", "vr/vi must each have one entry per bus");
        se.truth = std::move(t);
    }
    return se;
}

json se_to_json(const SeCase& se) {
    json j;
    j["case_name"] = se.case_name;
    j["seed"] = se.seed;
    json devices = json::array();
    for (const Device& d : se.devices) {
        json e;
        e["bus"] = d.bus;
        if (d.is_pmu()) {
            const PmuDevice& p = d.pmu();
            e["kind"] = "pmu";
            e["pmu"] = {{"g_pmu", p.g_pmu}, {"vr", p.vr},   {"vi", p.vi},
                        {"ir", p.ir},       {"ii", p.ii},   {"sigma_rel", p.sigma_rel},
                        {"perfect", p.perfect}};
        } else {
            const RtuDevice& r = d.rtu();
            e["kind"] = "rtu";
            e["rtu"] = {{"vm", r.vm},
                        {"p", r.p},
                        {"q", r.q},
                        {"sigma_vm_rel", r.sigma_vm_rel},
                        {"sigma_p_rel", r.sigma_p_rel},
                        {"sigma_q_rel", r.sigma_q_rel},
                        {"gamma", r.gamma}};
        }
        devices.push_back(std::move(e));
    }
    j["devices"] = std::move(devices);
    if (se.truth) {
        json t;
        t["vr"] = std::vector<double>(se.truth->vr.begin(), se.truth->vr.end());
        t["vi"] = std::vector<double>(se.truth->vi.begin(), se.truth->vi.end());
        j["truth"] = std::move(t);
    }
    return j;
}

json parse_json(std::string_view text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SchemaError("", std::string(what) + " is not valid JSON");
    return j;
}

}  // namespace

SeCase load_se_case(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), "measurement set");
    const json& name = require_key(j, "", "case_name");
    if (!name.is_string()) schema_fail("/case_name", "expected a string");
    std::filesystem::path grid_path = name.get<std::string>();
    if (!std::filesystem::exists(grid_path)) {
        std::filesystem::path sibling = path.parent_path() / grid_path;
        if (std::filesystem::exists(sibling)) grid_path = sibling;
    }
    if (!std::filesystem::exists(grid_path))
        throw IoError("grid case '" + name.get<std::string>() + "' referenced by " +
                      path.string() + " not found");
    SeCase se = se_from_json(j, load_case(grid_path));
    validate(se);
    return se;
}

void save_se_case(const SeCase& se, const std::filesystem::path& path) {
    write_file(path, se_case_to_json_string(se));
}

std::string se_case_to_json_string(const SeCase& se) {
    return se_to_json(se).dump(2) + "\n";
}

SeCase se_case_from_json_string(std::string_view text, GridCase grid) {
    SeCase se = se_from_json(parse_json(text, "measurement set"), std::move(grid));
    validate(se);
    return se;
}

std::string estimate_result_to_json_string(const EstimateResult& r, const SeCase& se) {
    json j;
    j["vr"] = std::vector<double>(r.vr.begin(), r.vr.end());
    j["vi"] = std::vector<double>(r.vi.begin(), r.vi.end());
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    if (se.truth) {
        j["sigma_ss"] = sigma_ss(r.vr, r.vi, se.truth->vr, se.truth->vi);
        j["sigma_max"] = sigma_max(r.vr, r.vi, se.truth->vr, se.truth->vi);
    }
    return j.dump(2) + "\n";
}

std::string pf_result_to_json_string(const Vec& vr, const Vec& vi, int iterations) {
    json j;
    j["vr"] = std::vector<double>(vr.begin(), vr.end());
    j["vi"] = std::vector<double>(vi.begin(), vi.end());
    j["iterations"] = iterations;
    return j.dump(2) + "\n";
}

namespace {

json stats_to_json(const std::vector<ChannelStats>& cs) {
    std::vector<double> mean, stddev, mn, mx;
    for (const ChannelStats& s : cs) {
        mean.push_back(s.mean);
        stddev.push_back(s.stddev);
        mn.push_back(s.min);
        mx.push_back(s.max);
    }
    return {{"mean", mean}, {"stddev", stddev}, {"min", mn}, {"max", mx}};
}

}  // namespace

std::string mc_summary_to_json_string(const McSummary& s, const SeCase& se) {
    json j;
    j["n"] = s.n;
    j["samples_requested"] = s.samples_requested;
    j["samples_completed"] = s.samples_completed;
    j["failed_samples"] = s.failed_samples;
    std::vector<int> bus_ids;
    for (const Bus& b : se.grid.buses) bus_ids.push_back(b.id);
    j["bus_ids"] = bus_ids;
    j["baseline"] = {{"vr", std::vector<double>(s.baseline.vr.begin(), s.baseline.vr.end())},
                     {"vi", std::vector<double>(s.baseline.vi.begin(), s.baseline.vi.end())},
                     {"objective", s.baseline.objective},
                     {"iterations", s.baseline.iterations},
                     {"converged", s.baseline.converged}};
    j["vm"] = stats_to_json(s.vm);
    j["va"] = stats_to_json(s.va);
    j["vr"] = stats_to_json(s.vr);
    j["vi"] = stats_to_json(s.vi);
    return j.dump(2) + "\n";
}

void write_histogram_csvs(const McSummary& s, const SeCase& se,
                          const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    auto write_one = [&](const std::vector<Histogram>& hists,
                         const std::filesystem::path& file) {
        std::ostringstream os;
        for (std::size_t i = 0; i < hists.size(); ++i) {
            os << se.grid.buses[i].id;
            for (double e : hists[i].edges) os << ',' << fmt17(e);
            for (std::uint64_t c : hists[i].counts) os << ',' << c;
            os << '\n';
        }
        write_file(file, os.str());
    };
    write_one(s.vm_hist, dir / "vm_hist.csv");
    write_one(s.va_hist, dir / "va_hist.csv");
}

PerturbationSpec load_perturbation_spec(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), "perturbation spec");
    if (!j.is_object()) schema_fail("", "top level must be an object");
    reject_unknown(j, "", {"sigma_line_r", "sigma_line_x", "sigma_xfmr_r", "sigma_xfmr_x"});
    PerturbationSpec spec;
    auto get = [&](const char* key, double& out) {
        if (auto it = j.find(key); it != j.end()) {
            if (!it->is_number()) schema_fail(std::string("/") + key, "expected a number");
            out = it->get<double>();
            if (out < 0.0) schema_fail(std::string("/") + key, "must be nonnegative");
        }
    };
    get("sigma_line_r", spec.sigma_line_r);
    get("sigma_line_x", spec.sigma_line_x);
    get("sigma_xfmr_r", spec.sigma_xfmr_r);
    get("sigma_xfmr_x", spec.sigma_xfmr_x);
    return spec;
}

}  // namespace gridse
