#pragma once

// On-disk dataset format. A dataset is a directory holding
//
//   meta.tsv      key<TAB>value lines: name, node_count, f, classes, task
//                 (transductive|inductive), labels (single|multi, default
//                 single), optional train_count / val_count / test_count
//   edges.tsv     u<TAB>v per line
//   features.tsv  node id followed by f tab-separated values, one node per line
//     or
//   features.bin  u64 rows, u64 cols, then rows*cols float32, all little-endian
//   labels.tsv    node id<TAB>class id, or comma-separated class ids for multi-label
//   splits.tsv    node id<TAB>train|val|test
//
// With features.tsv, node ids are arbitrary tokens numbered in file order. With
// features.bin they are the integers 0..rows-1. Lines starting with '#' and
// blank lines are ignored everywhere.

#include "n2g/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace n2g {

enum class TaskKind : std::uint8_t { transductive, inductive };
std::string_view to_string(TaskKind);
TaskKind parse_task_kind(std::string_view);

struct DatasetMeta {
    std::string name;
    NodeId node_count = 0;
    std::size_t f = 0;
    std::uint32_t classes = 0;
    TaskKind task = TaskKind::transductive;
    LabelKind labels = LabelKind::single;
    std::optional<std::size_t> train_count;
    std::optional<std::size_t> val_count;
    std::optional<std::size_t> test_count;

    bool operator==(const DatasetMeta&) const = default;
};

/// One split's graph for inductive tasks, renumbered densely; original_ids maps
/// back to the dataset-wide node id.
struct SplitGraph {
    Graph graph;
    std::vector<NodeId> original_ids;

    bool operator==(const SplitGraph&) const = default;
};

/// A loaded dataset. Transductive bundles carry the whole graph in `graph`.
/// Inductive bundles leave `graph` empty and carry one induced graph per split,
/// so no training-graph adjacency can reach a validation or test node.
struct DatasetBundle {
    DatasetMeta meta;
    Graph graph;
    SplitGraph train;
    SplitGraph val;
    SplitGraph test;

    bool inductive() const { return meta.task == TaskKind::inductive; }

    bool operator==(const DatasetBundle&) const = default;
};

/// Thrown for malformed dataset files; the message names file and line.
class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

DatasetBundle load_dataset(const std::filesystem::path& dir);

/// Builds a bundle from a whole graph, splitting it when meta.task is inductive.
DatasetBundle make_bundle(DatasetMeta meta, Graph graph);

/// Reassembles the dataset-wide graph (identity for transductive bundles).
Graph full_graph(const DatasetBundle& bundle);

/// Scales every feature row of every graph in the bundle to unit L1 norm.
void normalize_features(DatasetBundle& bundle);

enum class FeatureFormat : std::uint8_t { binary, text };

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir,
                  FeatureFormat format = FeatureFormat::binary);

} // namespace n2g
