// Copyright 2026 The mergebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* Compiles the public header as C and exercises a few calls. */

#include <stdio.h>

#include "mergebench.h"

int main(void) {
  mb_space* space = NULL;
  if (mb_space_from_name("smm-ps-3", &space) != MB_OK) return 1;
  if (mb_space_dimension(space) != 6) return 2;
  mb_space_free(space);
  if (mb_space_from_name("nonsense", &space) != MB_INVALID_ARGUMENT) return 3;
  printf("%s %s\n", mb_version(), mb_status_name(MB_INVALID_ARGUMENT));
  return 0;
}
