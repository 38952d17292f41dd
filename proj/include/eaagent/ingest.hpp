#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "eaagent/kg.hpp"

namespace eaagent {

// TSV parsers. Lines are 1-based; blank lines and '#...' comment lines are
// skipped but still counted. Input must be valid UTF-8.
//
// Attribute rows: entity \t attribute \t value, where the value keeps any
// further tabs. Relation rows: exactly head \t relation \t tail.
std::vector<AttributeTriple> parse_attribute_triples(std::istream& in);
std::vector<RelationTriple> parse_relation_triples(std::istream& in);

// Gold links: source \t target, one per line, sources unique.
std::vector<AlignmentPair> parse_entity_links(std::istream& in);

void write_attribute_triples(std::ostream& out, std::span<const AttributeTriple> triples);
void write_relation_triples(std::ostream& out, std::span<const RelationTriple> triples);
void write_entity_links(std::ostream& out, std::span<const AlignmentPair> links);

// Seeded Fisher-Yates over the pair list, then a round(ratio * n) cut.
// The shuffle is hand-rolled so identical seeds give identical splits on any
// platform; std::shuffle leaves the draw sequence implementation-defined.
std::pair<std::vector<AlignmentPair>, std::vector<AlignmentPair>> split_links(
    std::vector<AlignmentPair> links, double train_ratio, std::uint64_t seed);

struct DatasetBundle {
    KnowledgeGraph source_graph;
    KnowledgeGraph target_graph;
    std::vector<AlignmentPair> gold_links;
    std::vector<AlignmentPair> train_links;
    std::vector<AlignmentPair> test_links;
};

struct IngestRequest {
    std::filesystem::path source_attr_file;
    std::filesystem::path source_rel_file;
    std::filesystem::path target_attr_file;
    std::filesystem::path target_rel_file;
    std::filesystem::path links_file;
    double train_ratio = 0.3;
    std::uint64_t seed = 42;
    std::filesystem::path out_dir;
};

// Parses everything, validates that linked entities exist on their side,
// splits, and writes train/test link files plus manifest.json into out_dir.
DatasetBundle run_ingest(const IngestRequest& request);

// Reloads a bundle from a directory produced by run_ingest.
DatasetBundle load_bundle(const std::filesystem::path& dir);

}  // namespace eaagent
