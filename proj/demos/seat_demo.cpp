// Effect size of a small association test on the toy backend, then the
// same test with the target sets swapped.
#include <cstdio>

#include "mlbias/backend/toy.hpp"
#include "mlbias/seat.hpp"

int main() {
    using namespace mlbias;
    const ToyBackend backend(42, Pooling::mean);

    seat::AssociationTest test;
    test.name = "careers-family";
    test.targets_x = {"This is a man.", "This is a father.", "This is a son.", "This is a brother."};
    test.targets_y = {"This is a woman.", "This is a mother.", "This is a daughter.", "This is a sister."};
    test.attributes_a = {"This is work.", "This is an office.", "This is a salary."};
    test.attributes_b = {"This is home.", "This is a family.", "This is a wedding."};

    const auto r = seat::effect_size(test, backend);
    std::printf("%s: d = %.3f, p = %.4f (%s, %llu permutations)\n", r.test_name.c_str(), r.d, r.p_value,
                r.exact ? "exact" : "sampled", static_cast<unsigned long long>(r.n_permutations));

    std::swap(test.targets_x, test.targets_y);
    const auto s = seat::effect_size(test, backend);
    std::printf("swapped targets: d = %.3f\n", s.d);
}
