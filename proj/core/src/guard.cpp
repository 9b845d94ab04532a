#include "sheetguard/guard.hpp"
#include "sheetguard/digest.hpp"
#include "sheetguard/error.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <set>

namespace sheetguard {

Role RoleMap::at(const CellId& cell) const {
    auto it = roles.find(cell);
    if (it == roles.end()) throw NotFoundError("no role for " + to_string(cell));
    return it->second;
}

RoleMap infer_roles(const Workbook& w, const FlowGraph& g, const std::map<CellId, Role>& overrides) {
    RoleMap out;
    for (const auto& id : w.cell_ids()) {
        const auto* cell = w.find(id);
        auto idx = g.index_of(id);
        const bool referenced = idx && !g.direct_dependents(*idx).empty();
        if (cell->is_formula()) {
            out.roles.emplace(id, referenced ? Role::Code : Role::Output);
        } else {
            out.roles.emplace(id, referenced ? Role::Input : Role::Label);
        }
    }
    for (const auto& [id, role] : overrides) {
        const auto* cell = w.find(id);
        if (!cell) throw UsageError("role override on empty cell " + to_string(id));
        if (cell->is_formula() == is_constant_role(role)) {
            throw UsageError("cannot assign " + std::string(to_string(role)) + " to " +
                             (cell->is_formula() ? "formula" : "constant") + " cell " + to_string(id));
        }
        out.roles[id] = role;
    }
    bool any_formula = false;
    bool any_output = false;
    for (const auto& [id, role] : out.roles) {
        any_output = any_output || role == Role::Output;
        any_formula = any_formula || !is_constant_role(role);
    }
    if (any_formula && !any_output) out.warnings.emplace_back("workbook has no OUTPUT cell");
    return out;
}

std::string serialize_roles(const RoleMap& roles) {
    std::string out = "sgwroles 1\n";
    for (const auto& [id, role] : roles.roles) out += to_string(id) + "\t" + std::string(to_string(role)) + "\n";
    return out;
}

namespace {

std::string label_for(const Workbook& w, const RoleMap& roles, const CellId& cell) {
    for (Address near : {Address{cell.addr.col - 1, cell.addr.row}, Address{cell.addr.col, cell.addr.row - 1}}) {
        if (near.col < 1 || near.row < 1) continue;
        CellId id{cell.sheet, near};
        const auto* c = w.find(id);
        if (!c || c->is_formula() || !std::holds_alternative<std::string>(c->literal())) continue;
        auto role = roles.roles.find(id);
        if (role != roles.roles.end() && role->second == Role::Label) return std::get<std::string>(c->literal());
    }
    return to_string(cell);
}

CellRef sheet_ref(const CellId& id) { return CellRef{std::nullopt, id.sheet, id.addr.col, id.addr.row, false, false}; }

}  // namespace

Separation separate(const Workbook& w, const RoleMap& roles) {
    if (w.find_sheet(kFrontSheet)) throw UsageError("sheet name collision: " + std::string(kFrontSheet));

    std::vector<CellId> inputs;
    std::vector<CellId> outputs;
    for (const auto& id : w.cell_ids()) {
        auto it = roles.roles.find(id);
        if (it == roles.roles.end()) continue;
        if (it->second == Role::Input) inputs.push_back(id);
        if (it->second == Role::Output) outputs.push_back(id);
    }

    Separation result{w, {}};
    auto& out = result.workbook;
    for (const auto& sheet : w.sheets()) {
        for (const auto& [addr, cell] : sheet.cells()) {
            Cell locked = cell;
            locked.locked = true;
            out.set({sheet.name(), addr}, std::move(locked));
        }
    }
    auto& front = out.prepend_sheet(std::string(kFrontSheet));

    int row = 1;
    for (const auto& id : inputs) {
        const auto* cell = w.find(id);
        CellId front_cell{front.name(), {2, row}};
        front.set({1, row}, Cell::constant(label_for(w, roles, id), false, true));
        front.set({2, row}, Cell::constant(cell->literal(), false, false));
        out.set(id, Cell::formula_cell(make_ref(sheet_ref(front_cell)), cell->hidden, true));
        result.report.inputs.emplace_back(id, front_cell);
        ++row;
    }
    ++row;  // blank separator row
    for (const auto& id : outputs) {
        CellId front_cell{front.name(), {2, row}};
        front.set({1, row}, Cell::constant(label_for(w, roles, id), false, true));
        front.set({2, row}, Cell::formula_cell(make_ref(sheet_ref(id)), false, true));
        result.report.outputs.emplace_back(id, front_cell);
        ++row;
    }

    auto before = evaluate(w, build_flow_graph(w));
    auto after = evaluate(out, build_flow_graph(out));
    for (const auto& id : outputs) {
        const auto& a = before.at(id);
        const auto& b = after.at(id);
        if (!values_identical(a, b)) {
            result.report.preserved = false;
            result.report.value_diffs.push_back(to_string(id) + ": " + print_value(a) + " -> " + print_value(b));
        }
    }
    return result;
}

std::string canonical_serialize_program(const Workbook& w, const RoleMap& roles) {
    std::vector<CellId> cells = w.cell_ids();
    std::sort(cells.begin(), cells.end());
    auto flags = [](const Cell& c) { return std::string(1, c.hidden ? 'h' : '.') + (c.locked ? 'l' : '.'); };
    auto role_of = [&](const CellId& id, const Cell& c) {
        auto it = roles.roles.find(id);
        if (it != roles.roles.end()) return it->second;
        return c.is_formula() ? Role::Code : Role::Label;
    };

    std::string out = "sgwseal 1\n";
    for (const auto& id : cells) {
        const auto& cell = *w.find(id);
        if (role_of(id, cell) == Role::Input) continue;
        out += to_string(id);
        out += cell.is_formula() ? "\tF\t" : "\tC\t";
        out += print_content(cell);
        out += '\t';
        out += flags(cell);
        out += '\n';
    }
    for (const auto& id : cells) {
        const auto& cell = *w.find(id);
        if (role_of(id, cell) != Role::Input) continue;
        out += to_string(id) + "\tI\t-\t" + flags(cell) + "\n";
    }
    return out;
}

std::string program_digest(const Workbook& w, const std::map<CellId, Role>& overrides) {
    auto roles = infer_roles(w, build_flow_graph(w), overrides);
    return sha256_hex(canonical_serialize_program(w, roles));
}

SealManifest seal(const Workbook& w, const RoleMap& roles, std::string policy_digest, std::string prev,
                  std::string created_at) {
    SealManifest m;
    m.digest = sha256_hex(canonical_serialize_program(w, roles));
    m.role_digest = sha256_hex(serialize_roles(roles));
    m.policy_digest = std::move(policy_digest);
    m.created_at = std::move(created_at);
    m.prev = std::move(prev);
    return m;
}

std::string manifest_to_json(const SealManifest& m) {
    nlohmann::json j = {
        {"digest", m.digest},         {"role_digest", m.role_digest}, {"policy_digest", m.policy_digest},
        {"created_at", m.created_at}, {"tool_version", m.tool_version}, {"prev", m.prev},
    };
    return j.dump();
}

SealManifest manifest_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed manifest: ") + e.what(), 0, 0);
    }
    static const std::set<std::string> fields{"digest", "role_digest", "policy_digest", "created_at", "tool_version", "prev"};
    if (!j.is_object() || j.size() != fields.size()) throw ParseError("malformed manifest: wrong field set", 0, 0);
    for (const auto& [key, value] : j.items()) {
        if (!fields.count(key) || !value.is_string()) throw ParseError("malformed manifest: bad field '" + key + "'", 0, 0);
    }
    SealManifest m;
    m.digest = j["digest"];
    m.role_digest = j["role_digest"];
    m.policy_digest = j["policy_digest"];
    m.created_at = j["created_at"];
    m.tool_version = j["tool_version"];
    m.prev = j["prev"];
    auto is_hex_digest = [](const std::string& s) {
        return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
    };
    if (!is_hex_digest(m.digest) || !is_hex_digest(m.role_digest)) throw ParseError("malformed manifest: bad digest", 0, 0);
    if (m.prev != "-" && !is_hex_digest(m.prev)) throw ParseError("malformed manifest: bad prev", 0, 0);
    return m;
}

std::string manifest_digest(const SealManifest& m) { return sha256_hex(manifest_to_json(m)); }

std::string_view to_string(SealDiffEntry::Kind kind) noexcept {
    switch (kind) {
        case SealDiffEntry::Kind::Added: return "added";
        case SealDiffEntry::Kind::Removed: return "removed";
        case SealDiffEntry::Kind::Changed: return "changed";
    }
    return "?";
}

std::vector<SealDiffEntry> diff_serializations(std::string_view before, std::string_view after) {
    auto index = [](std::string_view text) {
        std::map<std::string, std::string> out;
        std::size_t start = 0;
        bool header = true;
        while (start < text.size()) {
            auto nl = text.find('\n', start);
            auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            start = nl == std::string_view::npos ? text.size() : nl + 1;
            if (header) {
                header = false;
                continue;
            }
            auto tab = line.find('\t');
            out[std::string(line.substr(0, tab))] = tab == std::string_view::npos ? "" : std::string(line.substr(tab + 1));
        }
        return out;
    };
    auto a = index(before);
    auto b = index(after);
    std::vector<SealDiffEntry> diff;
    for (const auto& [cell, fields] : a) {
        auto it = b.find(cell);
        if (it == b.end()) {
            diff.push_back({SealDiffEntry::Kind::Removed, cell, fields, ""});
        } else if (it->second != fields) {
            diff.push_back({SealDiffEntry::Kind::Changed, cell, fields, it->second});
        }
    }
    for (const auto& [cell, fields] : b) {
        if (!a.count(cell)) diff.push_back({SealDiffEntry::Kind::Added, cell, "", fields});
    }
    std::sort(diff.begin(), diff.end(), [](const SealDiffEntry& x, const SealDiffEntry& y) { return x.cell < y.cell; });
    return diff;
}

VerifyResult verify_seal(const Workbook& w, const RoleMap& roles, const SealManifest& manifest,
                         std::optional<std::string_view> retained_serialization, std::optional<std::string_view> policy_digest) {
    VerifyResult r;
    auto program = canonical_serialize_program(w, roles);
    r.digest_match = sha256_hex(program) == manifest.digest;
    r.role_match = sha256_hex(serialize_roles(roles)) == manifest.role_digest;
    if (policy_digest) r.policy_match = *policy_digest == manifest.policy_digest;
    r.match = r.digest_match && r.role_match && r.policy_match;
    if (!r.match && retained_serialization && sha256_hex(*retained_serialization) == manifest.digest) {
        r.diff_available = true;
        r.diff = diff_serializations(*retained_serialization, program);
    }
    return r;
}

namespace {

class LockedFile {
public:
    LockedFile(const std::filesystem::path& path, int flags, int lock) : fd_(::open(path.c_str(), flags, 0644)) {
        if (fd_ < 0) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
        if (::flock(fd_, lock) != 0) {
            ::close(fd_);
            throw Error("cannot lock " + path.string() + ": " + std::strerror(errno));
        }
    }
    ~LockedFile() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    LockedFile(const LockedFile&) = delete;
    LockedFile& operator=(const LockedFile&) = delete;

    std::string read_all() const {
        std::string out;
        char buf[4096];
        ::lseek(fd_, 0, SEEK_SET);
        for (;;) {
            auto n = ::read(fd_, buf, sizeof buf);
            if (n < 0) throw Error(std::string("read failed: ") + std::strerror(errno));
            if (n == 0) break;
            out.append(buf, static_cast<std::size_t>(n));
        }
        return out;
    }

    void append(std::string_view data) const {
        while (!data.empty()) {
            auto n = ::write(fd_, data.data(), data.size());
            if (n < 0) throw Error(std::string("write failed: ") + std::strerror(errno));
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
};

std::vector<SealManifest> parse_chain(std::string_view text) {
    std::vector<SealManifest> out;
    std::size_t start = 0;
    int lineno = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(manifest_from_json(line));
        } catch (const ParseError& e) {
            throw ParseError(e.message(), lineno, 0);
        }
    }
    return out;
}

}  // namespace

SealChain::SealChain(std::filesystem::path path) : path_(std::move(path)) {}

SealManifest SealChain::append(SealManifest m) const {
    LockedFile file(path_, O_RDWR | O_CREAT | O_APPEND, LOCK_EX);
    auto existing = parse_chain(file.read_all());
    m.prev = existing.empty() ? "-" : manifest_digest(existing.back());
    file.append(manifest_to_json(m) + "\n");
    return m;
}

std::vector<SealManifest> SealChain::read() const {
    if (!std::filesystem::exists(path_)) return {};
    LockedFile file(path_, O_RDONLY, LOCK_SH);
    return parse_chain(file.read_all());
}

std::vector<std::size_t> walk_chain(const std::vector<SealManifest>& entries) {
    std::vector<std::size_t> visited;
    if (entries.empty()) return visited;
    std::map<std::string, std::size_t> by_digest;
    for (std::size_t i = 0; i < entries.size(); ++i) by_digest.emplace(manifest_digest(entries[i]), i);
    std::set<std::size_t> seen;
    std::size_t current = entries.size() - 1;
    for (;;) {
        if (!seen.insert(current).second) break;
        visited.push_back(current);
        const auto& prev = entries[current].prev;
        if (prev == "-") break;
        auto it = by_digest.find(prev);
        if (it == by_digest.end()) break;
        current = it->second;
    }
    return visited;
}

bool chain_intact(const std::vector<SealManifest>& entries) {
    auto visited = walk_chain(entries);
    if (visited.size() != entries.size()) return false;
    for (std::size_t i = 0; i < visited.size(); ++i) {
        if (visited[i] != entries.size() - 1 - i) return false;
    }
    return entries.empty() || entries.front().prev == "-";
}

}  // namespace sheetguard
