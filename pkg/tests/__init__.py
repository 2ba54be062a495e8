# SPDX-FileCopyrightText: 2024-present David Huggins-Daines <dhd@ecolingui.ca>
#
# SPDX-License-Identifier: MIT
