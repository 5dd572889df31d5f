#include "vloc/cpg/serialize.hpp"

#include <json.hpp>

#include "vloc/common/io.hpp"

namespace vloc::cpg {

using ojson = nlohmann::ordered_json;

std::string serialize(const Sample& s) {
    ojson j;
    j["v"] = kSchemaVersion;
    j["function_name"] = s.graph.function_name;
    j["source_path"] = s.source_path;
    j["commit_ts"] = s.commit_ts;
    j["label_node"] = s.label_node;
    j["vulnerable_line"] = s.vulnerable_line ? ojson(*s.vulnerable_line) : ojson(nullptr);
    ojson nodes = ojson::array();
    for (const auto& n : s.graph.nodes) {
        ojson jn;
        jn["id"] = n.id;
        jn["kind"] = n.kind;
        jn["tokens"] = n.tokens;
        jn["line"] = n.line ? ojson(*n.line) : ojson(nullptr);
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    std::vector<Edge> edges = s.graph.edges;
    std::stable_sort(edges.begin(), edges.end(), edge_less);
    ojson je = ojson::array();
    for (const auto& e : edges) {
        ojson x;
        x["src"] = e.src;
        x["dst"] = e.dst;
        x["type"] = std::string(to_string(e.type));
        je.push_back(std::move(x));
    }
    j["edges"] = std::move(je);
    return j.dump();
}

namespace {

const ojson& field(const ojson& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw MalformedRecord(std::string("missing key \"") + key + "\"");
    return *it;
}

int int_field(const ojson& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) throw MalformedRecord(std::string("\"") + key + "\" must be an integer");
    return v.get<int>();
}

std::string str_field(const ojson& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw MalformedRecord(std::string("\"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::optional<int> opt_int_field(const ojson& j, const char* key) {
    const auto& v = field(j, key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number_integer()) throw MalformedRecord(std::string("\"") + key + "\" must be int or null");
    return v.get<int>();
}

} // namespace

Sample deserialize(std::string_view line) {
    ojson j;
    try {
        j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedRecord("record is not an object");
    const auto& v = field(j, "v");
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
        throw SchemaVersionMismatch("record version " + v.dump() + ", supported " + std::to_string(kSchemaVersion));

    Sample s;
    s.graph.function_name = str_field(j, "function_name");
    s.source_path = str_field(j, "source_path");
    {
        const auto& ts = field(j, "commit_ts");
        if (!ts.is_number_integer()) throw MalformedRecord("\"commit_ts\" must be an integer");
        s.commit_ts = ts.get<std::int64_t>();
    }
    s.label_node = int_field(j, "label_node");
    s.vulnerable_line = opt_int_field(j, "vulnerable_line");

    const auto& nodes = field(j, "nodes");
    if (!nodes.is_array()) throw MalformedRecord("\"nodes\" must be an array");
    for (const auto& jn : nodes) {
        if (!jn.is_object()) throw MalformedRecord("node is not an object");
        GraphNode n;
        n.id = int_field(jn, "id");
        n.kind = str_field(jn, "kind");
        const auto& toks = field(jn, "tokens");
        if (!toks.is_array()) throw MalformedRecord("\"tokens\" must be an array");
        for (const auto& t : toks) {
            if (!t.is_string()) throw MalformedRecord("token must be a string");
            n.tokens.push_back(t.get<std::string>());
        }
        n.line = opt_int_field(jn, "line");
        s.graph.nodes.push_back(std::move(n));
    }
    const auto& edges = field(j, "edges");
    if (!edges.is_array()) throw MalformedRecord("\"edges\" must be an array");
    for (const auto& je : edges) {
        if (!je.is_object()) throw MalformedRecord("edge is not an object");
        Edge e;
        e.src = int_field(je, "src");
        e.dst = int_field(je, "dst");
        const auto type = edge_type_from_string(str_field(je, "type"));
        if (!type) throw MalformedRecord("unknown edge type " + je["type"].dump());
        e.type = *type;
        s.graph.edges.push_back(e);
    }
    validate(s);
    return s;
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
    std::vector<Sample> out;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        try {
            out.push_back(deserialize(line));
        } catch (const SchemaVersionMismatch& e) {
            throw SchemaVersionMismatch(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw MalformedRecord(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string samples_to_jsonl(const std::vector<Sample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        out += serialize(s);
        out += '\n';
    }
    return out;
}

} // namespace vloc::cpg
