#include <catch2/catch_amalgamated.hpp>
#include "delegrid/delegrid.hpp"
