#pragma once

#include <functional>
#include <span>
#include <utility>

namespace sif {

// A drift field b_s(x, x0). Implementations must be safe to call from many
// threads at once on the same instance.
class DriftField {
public:
    virtual ~DriftField() = default;
    virtual int dim() const noexcept = 0;
    virtual void eval(double s, std::span<const double> x, std::span<const double> x0,
                      std::span<double> out) const = 0;
};

// Wraps an arbitrary callable; handy for tests and perturbed drifts.
class FunctionDrift final : public DriftField {
public:
    using Fn = std::function<void(double, std::span<const double>, std::span<const double>,
                                  std::span<double>)>;

    FunctionDrift(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

    int dim() const noexcept override { return dim_; }

    void eval(double s, std::span<const double> x, std::span<const double> x0,
              std::span<double> out) const override {
        fn_(s, x, x0, out);
    }

private:
    int dim_;
    Fn fn_;
};

// base drift plus a constant offset per coordinate
class ShiftedDrift final : public DriftField {
public:
    ShiftedDrift(const DriftField& base, std::vector<double> offset)
        : base_(&base), offset_(std::move(offset)) {}

    int dim() const noexcept override { return base_->dim(); }

    void eval(double s, std::span<const double> x, std::span<const double> x0,
              std::span<double> out) const override {
        base_->eval(s, x, x0, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset_[i];
    }

private:
    const DriftField* base_;
    std::vector<double> offset_;
};

}  // namespace sif
