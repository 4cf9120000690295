#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "forgetprobe/matrix.hpp"

namespace fp {

// A flat labelled dataset: one example per row, pixels scaled to [0, 1],
// labels in original class ids.
struct LabeledSet {
    Matrix inputs;
    std::vector<int> labels;

    int size() const { return inputs.rows; }
    int dim() const { return inputs.cols; }
};

// Loads an IDX image/label file pair (plain or gzip; gzip is detected from
// the stream itself, not the file name). Pixel bytes are scaled by 1/255.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path);

// Loads CIFAR-10 binary batches (3073-byte records: label byte + 3072 pixel
// bytes, channel-major RGB) and concatenates them in the order given.
LabeledSet load_cifar10(const std::vector<std::string>& batch_paths);

// One stage of a class-incremental sequence.
struct Task {
    int index = 0;                  // 1-based position in the sequence
    std::vector<int> classes;       // global class ids, ascending
    LabeledSet train;
    LabeledSet val;
    std::vector<int> train_local;   // labels remapped to [0, classes.size())
    std::vector<int> val_local;

    int to_local(int global_label) const;
};

struct TaskSequence {
    std::string dataset;
    std::vector<Task> tasks;
    int n_tasks() const { return static_cast<int>(tasks.size()); }
};

// Partitions classes [0, n_tasks*classes_per_task) into consecutive ascending
// groups; task t holds exactly the examples of its classes. Validation split
// is carved from `data` per task: a deterministic shuffle (from `seed`) sends
// 10% of each task's examples to val.
TaskSequence split_tasks(const LabeledSet& data, int n_tasks, int classes_per_task,
                         std::uint64_t seed);

// Same partition, but the held-out split comes from a separate set (the
// canonical test split); `train` is used in full and no carving happens.
TaskSequence split_tasks(const LabeledSet& train, const LabeledSet& test, int n_tasks,
                         int classes_per_task, std::uint64_t seed);

// Deterministic minibatch iterator. Each epoch reshuffles from (seed, epoch)
// only, so a given (dataset, seed, epoch) always yields the same batches.
// The final short batch is kept.
class BatchStream {
public:
    BatchStream(const Matrix& inputs, const std::vector<int>& labels, int batch_size,
                std::uint64_t seed);
    void begin_epoch(int epoch);
    bool next(Matrix& x, std::vector<int>& y);
    int n_batches() const;

private:
    const Matrix* inputs_;
    const std::vector<int>* labels_;
    int batch_size_;
    std::uint64_t seed_;
    std::vector<int> order_;
    std::size_t cursor_ = 0;
};

struct DatasetPair {
    LabeledSet train;
    LabeledSet test;
};

// name is one of "mnist", "fashion", "cifar10"; files are expected under
// <data_dir>/<name>/ with their canonical names (see README).
DatasetPair load_dataset(const std::string& name, const std::string& data_dir);

bool is_known_dataset(const std::string& name);
int dataset_input_dim(const std::string& name);
int dataset_default_bottleneck(const std::string& name);
int dataset_default_epochs_per_task(const std::string& name);

// Loads a dataset and reports shape/label statistics (for the verify-data
// command). Throws FormatError on any structural problem.
struct DatasetSummary {
    std::string name;
    int n_train = 0;
    int n_test = 0;
    int dim = 0;
    std::array<int, 10> train_class_counts{};
    std::array<int, 10> test_class_counts{};
};
DatasetSummary verify_dataset(const std::string& name, const std::string& data_dir);

}  // namespace fp
