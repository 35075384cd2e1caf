"""Render the fixed report layouts with their illustrative display values:
the accuracy comparison, the analyst-benchmark gains, the nested-test
panel, and the two chart-ready treatment-effect CSVs."""

from narralab import reports

print(reports.render_accuracy_table(reports.REFERENCE_ACCURACY))
print(reports.render_analyst_benchmark_table(reports.REFERENCE_ANALYST_BENCHMARK))
print(reports.render_nested_test_table(reports.REFERENCE_NESTED_TEST))
print(reports.render_pte_level_csv(reports.REFERENCE_PTE_LEVELS,
                                   reports.REFERENCE_FUNDAMENTAL_NEWS_BPS))
print(reports.render_pte_disagreement_csv(reports.REFERENCE_PTE_DISAGREEMENT,
                                          reports.REFERENCE_FUNDAMENTAL_NEWS_BPS))
