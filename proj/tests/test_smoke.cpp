#include <doctest.h>

#include "avex/corpus.hpp"
#include "avex/evaluation.hpp"
#include "avex/gradcheck.hpp"
#include "avex/model.hpp"
#include "avex/train.hpp"

TEST_CASE("headers compose") {
    avex::Array2 a(2, 2);
    a.at(0, 0) = 1.0;
    CHECK(a.at(0, 0) == 1.0);
}
