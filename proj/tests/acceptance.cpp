#include "delegrid/delegrid.hpp"
int main(){return 0;}
