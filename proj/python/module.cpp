#include <pybind11/pybind11.h>
PYBIND11_MODULE(spicer, m) { m.doc() = "placeholder"; }
