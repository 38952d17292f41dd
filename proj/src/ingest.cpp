#include "eaagent/ingest.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "eaagent/text.hpp"

namespace eaagent {

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kTrainLinksName = "train_links.tsv";
constexpr const char* kTestLinksName = "test_links.tsv";

// Walks physical lines, handing payload lines (with line numbers) to fn.
// Strips a trailing '\r' so CRLF dumps parse the same as LF ones.
template <typename Fn>
void for_each_payload_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!is_valid_utf8(line)) throw MalformedLineError(line_no, "invalid UTF-8");
        std::string_view body = line;
        if (trim(body).empty()) continue;
        if (!body.empty() && body.front() == '#') continue;
        fn(line_no, body);
    }
}

Iri field_iri(std::size_t line_no, std::string_view field, const char* what) {
    if (field.empty()) throw MalformedLineError(line_no, std::string("empty ") + what + " field");
    try {
        return Iri(std::string(field));
    } catch (const DataError& e) {
        throw MalformedLineError(line_no, e.what());
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file: " + path.string());
    return f;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write file: " + path.string());
    return f;
}

}  // namespace

std::vector<AttributeTriple> parse_attribute_triples(std::istream& in) {
    std::vector<AttributeTriple> out;
    for_each_payload_line(in, [&](std::size_t line_no, std::string_view body) {
        auto fields = split_tabs(body);
        if (fields.size() < 3)
            throw MalformedLineError(line_no, "expected entity\\tattribute\\tvalue");
        AttributeTriple t;
        t.entity = field_iri(line_no, fields[0], "entity");
        t.attribute = field_iri(line_no, fields[1], "attribute");
        // The value is everything after the second tab, tabs included.
        std::string value(fields[2]);
        for (std::size_t i = 3; i < fields.size(); ++i) {
            value += '\t';
            value += fields[i];
        }
        if (value.empty()) throw MalformedLineError(line_no, "empty value field");
        t.value = std::move(value);
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<RelationTriple> parse_relation_triples(std::istream& in) {
    std::vector<RelationTriple> out;
    for_each_payload_line(in, [&](std::size_t line_no, std::string_view body) {
        auto fields = split_tabs(body);
        if (fields.size() != 3)
            throw MalformedLineError(line_no, "expected exactly head\\trelation\\ttail");
        RelationTriple t;
        t.head = field_iri(line_no, fields[0], "head");
        t.relation = field_iri(line_no, fields[1], "relation");
        t.tail = field_iri(line_no, fields[2], "tail");
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<AlignmentPair> parse_entity_links(std::istream& in) {
    std::vector<AlignmentPair> out;
    std::unordered_set<Iri> seen_sources;
    for_each_payload_line(in, [&](std::size_t line_no, std::string_view body) {
        auto fields = split_tabs(body);
        if (fields.size() != 2)
            throw MalformedLineError(line_no, "expected exactly source\\ttarget");
        AlignmentPair p;
        p.source = field_iri(line_no, fields[0], "source");
        p.target = field_iri(line_no, fields[1], "target");
        if (!seen_sources.insert(p.source).second)
            throw DuplicateSourceError(line_no, p.source.str());
        out.push_back(std::move(p));
    });
    return out;
}

void write_attribute_triples(std::ostream& out, std::span<const AttributeTriple> triples) {
    for (const auto& t : triples)
        out << t.entity.str() << '\t' << t.attribute.str() << '\t' << t.value << '\n';
}

void write_relation_triples(std::ostream& out, std::span<const RelationTriple> triples) {
    for (const auto& t : triples)
        out << t.head.str() << '\t' << t.relation.str() << '\t' << t.tail.str() << '\n';
}

void write_entity_links(std::ostream& out, std::span<const AlignmentPair> links) {
    for (const auto& p : links) out << p.source.str() << '\t' << p.target.str() << '\n';
}

std::pair<std::vector<AlignmentPair>, std::vector<AlignmentPair>> split_links(
    std::vector<AlignmentPair> links, double train_ratio, std::uint64_t seed) {
    if (links.empty()) throw EmptyLinksError();
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        throw ConfigError("train_ratio must lie strictly between 0 and 1");

    std::mt19937_64 rng(seed);
    for (std::size_t i = links.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(links[i], links[j]);
    }

    // Size contract is exact: |train| = round(ratio * n), remainder is test.
    auto n_train = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(links.size())));

    std::vector<AlignmentPair> train(links.begin(), links.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<AlignmentPair> test(links.begin() + static_cast<std::ptrdiff_t>(n_train), links.end());
    return {std::move(train), std::move(test)};
}

namespace {

void validate_links(const DatasetBundle& bundle) {
    for (const auto& p : bundle.gold_links) {
        if (!bundle.source_graph.contains(p.source))
            throw DataError("linked source entity has no triples: " + p.source.str());
        if (!bundle.target_graph.contains(p.target))
            throw DataError("linked target entity has no triples: " + p.target.str());
    }
}

DatasetBundle load_parts(const std::filesystem::path& source_attr,
                         const std::filesystem::path& source_rel,
                         const std::filesystem::path& target_attr,
                         const std::filesystem::path& target_rel,
                         const std::filesystem::path& links) {
    DatasetBundle bundle;
    {
        auto fa = open_input(source_attr);
        auto fr = open_input(source_rel);
        bundle.source_graph = build_graph(parse_attribute_triples(fa), parse_relation_triples(fr));
    }
    {
        auto fa = open_input(target_attr);
        auto fr = open_input(target_rel);
        bundle.target_graph = build_graph(parse_attribute_triples(fa), parse_relation_triples(fr));
    }
    {
        auto fl = open_input(links);
        bundle.gold_links = parse_entity_links(fl);
    }
    validate_links(bundle);
    return bundle;
}

}  // namespace

DatasetBundle run_ingest(const IngestRequest& request) {
    for (const auto* p : {&request.source_attr_file, &request.source_rel_file,
                          &request.target_attr_file, &request.target_rel_file,
                          &request.links_file}) {
        if (!std::filesystem::exists(*p))
            throw ConfigError("input file does not exist: " + p->string());
    }
    if (request.out_dir.empty()) throw ConfigError("ingest needs an output directory");

    DatasetBundle bundle =
        load_parts(request.source_attr_file, request.source_rel_file, request.target_attr_file,
                   request.target_rel_file, request.links_file);

    auto [train, test] = split_links(bundle.gold_links, request.train_ratio, request.seed);
    bundle.train_links = std::move(train);
    bundle.test_links = std::move(test);

    std::filesystem::create_directories(request.out_dir);
    {
        auto f = open_output(request.out_dir / kTrainLinksName);
        write_entity_links(f, bundle.train_links);
    }
    {
        auto f = open_output(request.out_dir / kTestLinksName);
        write_entity_links(f, bundle.test_links);
    }

    nlohmann::json manifest;
    manifest["format"] = "ea-agent-bundle/1";
    manifest["source"] = {
        {"attribute_file", std::filesystem::absolute(request.source_attr_file).string()},
        {"relation_file", std::filesystem::absolute(request.source_rel_file).string()},
        {"entities", bundle.source_graph.entities().size()},
        {"attribute_triples", bundle.source_graph.attribute_triples().size()},
        {"relation_triples", bundle.source_graph.relation_triples().size()},
    };
    manifest["target"] = {
        {"attribute_file", std::filesystem::absolute(request.target_attr_file).string()},
        {"relation_file", std::filesystem::absolute(request.target_rel_file).string()},
        {"entities", bundle.target_graph.entities().size()},
        {"attribute_triples", bundle.target_graph.attribute_triples().size()},
        {"relation_triples", bundle.target_graph.relation_triples().size()},
    };
    manifest["links"] = {
        {"file", std::filesystem::absolute(request.links_file).string()},
        {"pairs", bundle.gold_links.size()},
    };
    manifest["split"] = {
        {"train_ratio", request.train_ratio},
        {"seed", request.seed},
        {"train_file", kTrainLinksName},
        {"test_file", kTestLinksName},
        {"train_pairs", bundle.train_links.size()},
        {"test_pairs", bundle.test_links.size()},
    };
    {
        auto f = open_output(request.out_dir / kManifestName);
        f << manifest.dump(2) << '\n';
    }
    return bundle;
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
    auto manifest_path = dir / kManifestName;
    if (!std::filesystem::exists(manifest_path))
        throw ConfigError("not a bundle directory (missing manifest.json): " + dir.string());

    nlohmann::json manifest;
    try {
        auto f = open_input(manifest_path);
        f >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad bundle manifest: " + std::string(e.what()));
    }

    try {
        DatasetBundle bundle = load_parts(
            manifest.at("source").at("attribute_file").get<std::string>(),
            manifest.at("source").at("relation_file").get<std::string>(),
            manifest.at("target").at("attribute_file").get<std::string>(),
            manifest.at("target").at("relation_file").get<std::string>(),
            manifest.at("links").at("file").get<std::string>());

        auto split = manifest.at("split");
        {
            auto f = open_input(dir / split.at("train_file").get<std::string>());
            bundle.train_links = parse_entity_links(f);
        }
        {
            auto f = open_input(dir / split.at("test_file").get<std::string>());
            bundle.test_links = parse_entity_links(f);
        }
        return bundle;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad bundle manifest: " + std::string(e.what()));
    }
}

}  // namespace eaagent
