#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "imcdse/fastsim.hpp"

namespace imcdse {

struct TaskSpec {
    int classes = 10;
    int dim = 64;
    int n_train = 2000;
    int n_test = 1000;
    double separation = 5.2;
    double density_lo = 0.25; // support density of class 0; rises linearly to 1 for the last class
    uint64_t seed = 7;
};

struct Task {
    TaskSpec spec;
    std::vector<double> weights;     // classes x dim, class centroids
    std::vector<double> test_x;      // n_test x dim, ReLU features
    std::vector<int> test_y;
    double real_top1 = 0, real_topk = 0;
};

struct Int4Tensor {
    std::vector<int> codes;
    double scale = 1.0;
};

Task make_task(const TaskSpec& spec);
Int4Tensor quantize_int4(const std::vector<double>& values);

enum class BackendKind { Exact, Lut, Stochastic };

struct MulBackend {
    BackendKind kind = BackendKind::Exact;
    std::string name = "exact";
    std::array<int, 256> lut{}; // [a*16 + b] expected unsigned code
    // stochastic: nominal per-bit discharge and sigma per WL code
    CircuitConfig cfg;
    AdcCalibration cal;
    std::array<std::array<double, 4>, 16> dv{}, sg{};
    uint64_t seed = 0;

    static MulBackend exact();
    static MulBackend from_lut(const std::string& name, const SweepResult& nominal);
    static MulBackend stochastic(const std::string& name, const CircuitConfig& cfg, const Model& m, uint64_t seed);
};

// sign-magnitude around the unsigned multiplier; key selects the mismatch draw
long signed_mul(int a, int b, const MulBackend& be, uint64_t key = 0);

struct Accuracy {
    std::string backend;
    double top1 = 0, topk = 0;
    int k = 5;
};

// scores accumulate exactly in 64-bit integers
std::vector<Accuracy> infer_and_score(const Task& task, const std::vector<MulBackend>& backends, int jobs = 1);

void write_lut_csv(const MulBackend& be, const std::string& path);
void write_accuracy_csv(const std::vector<Accuracy>& acc, const std::string& path);

} // namespace imcdse
