#include <filesystem>

#include "bridge.hpp"
#include "metamorph/sut.hpp"

namespace metamorph {

namespace {

class LocSut final : public Sut {
  public:
    LocSut() { descriptor_ = SutDescriptor{kBuiltinLocId, loc_interface(), Backend::BuiltinLoc, {}}; }

    const SutDescriptor &descriptor() const override { return descriptor_; }

    SignalBundle simulate(const SignalBundle &inputs, const TimeGrid &grid) override {
        return simulate_loc(inputs, grid);
    }

  private:
    SutDescriptor descriptor_;
};

} // namespace

SutDescriptor resolve_sut(const std::string &locator) {
    if (locator == kBuiltinLocId) {
        return SutDescriptor{kBuiltinLocId, loc_interface(), Backend::BuiltinLoc, {}};
    }
    if (locator.rfind("builtin:", 0) == 0) {
        throw ConfigError("unknown built-in SUT " + locator);
    }
    SutDescriptor d;
    d.id = locator;
    d.backend = Backend::Bridge;
    d.fmu = locator;
    std::error_code ec;
    if (std::filesystem::is_regular_file(d.fmu, ec)) {
        d.interface = read_model_description(d.fmu);
    }
    return d;
}

std::unique_ptr<Sut> open_sut(const SutDescriptor &descriptor, const SutOptions &options) {
    if (descriptor.backend == Backend::BuiltinLoc) {
        return std::make_unique<LocSut>();
    }
    std::error_code ec;
    if (descriptor.fmu.empty() || !std::filesystem::is_regular_file(descriptor.fmu, ec)) {
        throw BackendError("BadFmu", "FMU not found: " + descriptor.fmu.string());
    }
    return detail::open_bridge(descriptor, options);
}

} // namespace metamorph
